"""Joint BS beamforming and STAR-RIS configuration for QoS-constrained sum-rate maximisation."""
from .bcd import (BcdConfig, OptimizationResult, SCHEMES, bcd_optimize, compare_schemes,
                  run_baseline, run_scheme)
from .geometry import ArrayGeometry, ChannelSet, build_channel_set, los_channel, path_loss, steering_vector
from .network import Network
from .oracle import GridSpec, brute_force_optimize, received_signal_rate_check, single_user_capacity
from .profile import StarRisProfile, baseline_profile, profile_from_vectors, validate_es
from .rates import RateReport, evaluate, user_rate
from .scenario import ScenarioError, ScenarioSpec, default_scenario, load_scenario
from .sweep import SweepSpec, load_sweep, run_sweep

__version__ = "0.1.0"
