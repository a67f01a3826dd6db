"""A scenario bound to its channels, with the cascaded matrices the optimiser needs."""
from __future__ import annotations

import numpy as np

from . import rates
from .fractional import AuxiliaryState, surrogate_objective, update_auxiliary
from .geometry import build_channel_set
from .rates import REFLECTION, TRANSMISSION


class Network:
    def __init__(self, scenario, channels=None, seed: int | None = None):
        self.scenario = scenario
        self.channels = channels if channels is not None else build_channel_set(scenario, seed)
        self.users = rates.users_of(scenario)
        self.noise = scenario.noise_power
        self.p_t = scenario.p_t_watts
        self.n_antennas = scenario.bs.antenna_count
        self.stream_count = scenario.stream_count
        self.element_counts = [r.element_count for r in scenario.star_ris]
        self.offsets = np.concatenate([[0], np.cumsum(self.element_counts)]).astype(int)
        self.r_min = np.array([u.r_min for u in self.users])

        ch = self.channels
        K = len(scenario.star_ris)
        # per user: cascaded matrix acting on theta_k (transmission) or phi (reflection)
        self.cascades = []
        for u in self.users:
            if u.side == TRANSMISSION:
                h = ch.ris_to_trans_user[u.group][u.member]
                self.cascades.append(rates.cascade_transmission(h, ch.bs_to_ris[u.ris]))
            else:
                self.cascades.append(rates.cascade_reflection(
                    ch.bs_to_refl_user[u.group],
                    [ch.ris_to_refl_user[k][u.group] for k in range(K)], ch.bs_to_ris))

    @property
    def surface_count(self) -> int:
        return len(self.element_counts)

    def global_index(self, k: int, n: int) -> int:
        """Position of element ``n`` of surface ``k`` inside the stacked reflection vector."""
        if not 0 <= n < self.element_counts[k]:
            raise IndexError(f"element {n} out of range for surface {k}")
        return int(self.offsets[k] + n)

    def effective_channels(self, profiles) -> list:
        """Effective channels through the cascaded (stacked) form."""
        v_r = np.concatenate([p.v_r for p in profiles] + [np.ones(1)])
        out = []
        for u, C in zip(self.users, self.cascades):
            row = profiles[u.ris].v_t @ C if u.side == TRANSMISSION else v_r @ C
            out.append(row.conj())
        return out

    def evaluate(self, profiles, beams) -> rates.RateReport:
        return rates.evaluate(self.scenario, self.channels, profiles, beams,
                              g_list=self.effective_channels(profiles))

    def power_pairs(self, profiles, beams, g_list=None):
        g_list = self.effective_channels(profiles) if g_list is None else g_list
        gains = np.abs(np.stack([beams @ g.conj() for g in g_list])) ** 2   # (U, S)
        streams = np.array([u.stream for u in self.users])
        P = gains[np.arange(len(self.users)), streams]
        Q = gains.sum(axis=1) + self.noise
        return P, Q

    def auxiliary(self, profiles, beams) -> AuxiliaryState:
        return update_auxiliary(*self.power_pairs(profiles, beams))

    def surrogate(self, profiles, beams, aux: AuxiliaryState) -> float:
        P, Q = self.power_pairs(profiles, beams)
        return surrogate_objective(P, Q, aux.alpha, aux.eta)

    def rate_upper_bound(self) -> float:
        """Sum over users of the single-user capacity with every surface element
        co-phased towards that user at full amplitude and the whole budget."""
        total = 0.0
        for u, C in zip(self.users, self.cascades):
            # triangle inequality over rows of the cascade
            gmax = float(np.sum(np.linalg.norm(C, axis=1)))
            total += np.log2(1.0 + self.p_t * gmax**2 / self.noise)
        return total

    def reflection_users(self):
        return [u for u in self.users if u.side == REFLECTION]
