"""Line-of-sight channel synthesis for x-axis uniform linear arrays.

All links are rank-one outer products of two steering vectors scaled by the
free-space amplitude gain.  Channel vectors that feed a receiver are stored as
column vectors ``h`` so that the received signal is ``h.conj() @ x``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

PATHLOSS_REF_DB = -20.0


class Position3D(NamedTuple):
    x: float
    y: float
    z: float


def as_position(p: Sequence[float]) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"position must have 3 coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"position has non-finite coordinates: {arr.tolist()}")
    return arr


@dataclass(frozen=True)
class ArrayGeometry:
    """ULA laid out along the x-axis; ``spacing`` is in carrier wavelengths."""

    element_count: int
    spacing: float = 0.5

    def __post_init__(self):
        if int(self.element_count) != self.element_count or self.element_count < 1:
            raise ValueError(f"element_count must be a positive integer, got {self.element_count}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")


def steering_vector(geometry: ArrayGeometry, direction_cosine: float) -> np.ndarray:
    """Array response ``exp(j 2 pi spacing n cos)`` for n = 0..N-1."""
    c = float(direction_cosine)
    # allow round-off from normalising a direction vector
    if not -1.0 - 1e-12 <= c <= 1.0 + 1e-12:
        raise ValueError(f"direction cosine {c} outside [-1, 1]")
    c = min(1.0, max(-1.0, c))
    n = np.arange(geometry.element_count)
    return np.exp(2j * np.pi * geometry.spacing * n * c)


def path_loss(distance: float, ref_db: float = PATHLOSS_REF_DB) -> float:
    """Free-space power gain, ``10**(ref_db/10) * d**-2``."""
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return 10.0 ** (ref_db / 10.0) / distance**2


def los_channel(tx_pos, tx_geom: ArrayGeometry, rx_pos, rx_geom: ArrayGeometry,
                ref_db: float = PATHLOSS_REF_DB, phase: float = 0.0) -> np.ndarray:
    """Rank-one LoS matrix of shape (N_rx, N_tx).

    The transmitter sees the link at direction cosine ``u_x`` and the receiver
    at ``-u_x``, where ``u`` is the unit vector from transmitter to receiver.
    """
    tx = as_position(tx_pos)
    rx = as_position(rx_pos)
    delta = rx - tx
    d = float(np.linalg.norm(delta))
    if d == 0.0:
        raise ValueError("transmitter and receiver positions coincide")
    cos = delta[0] / d
    a_tx = steering_vector(tx_geom, cos)
    a_rx = steering_vector(rx_geom, -cos)
    gain = np.sqrt(path_loss(d, ref_db)) * np.exp(1j * phase)
    return gain * np.outer(a_rx, a_tx.conj())


@dataclass(frozen=True)
class ChannelSet:
    """All channel families of the network.

    bs_to_ris[k]            (N_k, N_0) matrix H_{0,k}
    bs_to_refl_user[j]      (N_0,) column vector h_{0,j}
    ris_to_trans_user[g][m] (N_k,) vector for member m of transmission group g
                            (served by surface ``groups[g].ris_index``)
    ris_to_refl_user[k][j]  (N_k,) vector h_{k,j}
    """

    bs_to_ris: list
    bs_to_refl_user: list
    ris_to_trans_user: list
    ris_to_refl_user: list

    def copy(self) -> "ChannelSet":
        return ChannelSet(
            [H.copy() for H in self.bs_to_ris],
            [h.copy() for h in self.bs_to_refl_user],
            [[h.copy() for h in grp] for grp in self.ris_to_trans_user],
            [[h.copy() for h in row] for row in self.ris_to_refl_user],
        )


def _receive_vector(H: np.ndarray) -> np.ndarray:
    # single-antenna receiver: H is (1, N_tx) = h^H
    return H[0].conj()


def build_channel_set(scenario, seed: int | None = None) -> ChannelSet:
    """Synthesize every LoS link of ``scenario``.

    When ``scenario.random_link_phase`` is set, each link gets a global phase
    drawn from ``seed`` (falling back to ``scenario.seed``); otherwise the
    result does not depend on the seed at all.
    """
    seed = scenario.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    random_phase = bool(getattr(scenario, "random_link_phase", False))

    def phase() -> float:
        return float(rng.uniform(0.0, 2 * np.pi)) if random_phase else 0.0

    ref_db = scenario.pathloss_ref_db
    bs_geom = ArrayGeometry(scenario.bs.antenna_count, scenario.bs.spacing)
    single = ArrayGeometry(1)
    ris_geoms = [ArrayGeometry(r.element_count, r.spacing) for r in scenario.star_ris]

    bs_to_ris = [los_channel(scenario.bs.position, bs_geom, r.position, g, ref_db, phase())
                 for r, g in zip(scenario.star_ris, ris_geoms)]
    bs_to_refl = [_receive_vector(los_channel(scenario.bs.position, bs_geom, u.position, single,
                                              ref_db, phase()))
                  for u in scenario.reflection_users]
    trans = []
    for grp in scenario.transmission_groups:
        ris = scenario.star_ris[grp.ris_index]
        geom = ris_geoms[grp.ris_index]
        trans.append([_receive_vector(los_channel(ris.position, geom, p, single, ref_db, phase()))
                      for p in grp.positions])
    refl = []
    for ris, geom in zip(scenario.star_ris, ris_geoms):
        refl.append([_receive_vector(los_channel(ris.position, geom, u.position, single,
                                                 ref_db, phase()))
                     for u in scenario.reflection_users])
    return ChannelSet(bs_to_ris, bs_to_refl, trans, refl)
