"""Effective channels, SINR and achievable rates.

Beamformers are held as a ``(S, N_0)`` complex array whose row ``i`` is the
precoder of stream ``i``.  Streams ``0..G-1`` are the multicast streams of the
transmission groups (in scenario order), streams ``G..G+J_0-1`` the unicast
streams of the reflection users.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRANSMISSION = "transmission"
REFLECTION = "reflection"


@dataclass(frozen=True)
class User:
    side: str
    group: int          # transmission group index, or reflection user index
    member: int         # member index within the group (0 for reflection users)
    ris: int | None     # serving surface of a transmission user
    stream: int
    r_min: float

    @property
    def label(self) -> str:
        if self.side == TRANSMISSION:
            return f"T{self.group}.{self.member}"
        return f"R{self.group}"


def users_of(scenario) -> list[User]:
    """Transmission users group by group, then reflection users."""
    out = []
    for g, grp in enumerate(scenario.transmission_groups):
        for m in range(len(grp.positions)):
            out.append(User(TRANSMISSION, g, m, grp.ris_index, g, grp.r_min))
    G = len(scenario.transmission_groups)
    for j, u in enumerate(scenario.reflection_users):
        out.append(User(REFLECTION, j, 0, None, G + j, u.r_min))
    return out


def total_power(beams: np.ndarray) -> float:
    return float(np.sum(np.abs(beams) ** 2))


def effective_transmission_channel(h, v_t, H0k) -> np.ndarray:
    """``g`` with ``g^H = h^H diag(v_t) H_{0,k}``."""
    h, v_t, H0k = np.asarray(h), np.asarray(v_t), np.asarray(H0k)
    if h.shape != v_t.shape or H0k.shape[0] != h.size:
        raise ValueError(f"dimension mismatch: h {h.shape}, v_t {v_t.shape}, H {H0k.shape}")
    return (h.conj() @ np.diag(v_t) @ H0k).conj()


def effective_reflection_channel(h0, h_list, v_r_list, H0_list) -> np.ndarray:
    """``g`` with ``g^H = h_0^H + sum_k h_k^H diag(v_r_k) H_{0,k}``."""
    h0 = np.asarray(h0)
    if not (len(h_list) == len(v_r_list) == len(H0_list)):
        raise ValueError("per-surface lists must have equal length")
    row = h0.conj().astype(complex)
    for h, v, H in zip(h_list, v_r_list, H0_list):
        h, v, H = np.asarray(h), np.asarray(v), np.asarray(H)
        if h.shape != v.shape or H.shape != (h.size, h0.size):
            raise ValueError(f"dimension mismatch: h {h.shape}, v_r {v.shape}, H {H.shape}")
        row = row + h.conj() @ np.diag(v) @ H
    return row.conj()


def cascade_transmission(h, H0k) -> np.ndarray:
    """``diag(h^H) H_{0,k}``, shape (N_k, N_0)."""
    return np.asarray(h).conj()[:, None] * np.asarray(H0k)


def cascade_reflection(h0, h_list, H0_list) -> np.ndarray:
    """Stacked ``[diag(h^H) H_0 ; h_0^H]``, shape (sum N_k + 1, N_0)."""
    blocks = [cascade_transmission(h, H) for h, H in zip(h_list, H0_list)]
    blocks.append(np.asarray(h0).conj()[None, :])
    return np.vstack(blocks)


def stacked_transmission_channel(h, v_t, H0k) -> np.ndarray:
    """Same channel as effective_transmission_channel, through ``theta^H H_{k,j}``."""
    theta = np.asarray(v_t).conj()
    return (theta.conj() @ cascade_transmission(h, H0k)).conj()


def stacked_reflection_channel(h0, h_list, v_r_list, H0_list) -> np.ndarray:
    phi = np.concatenate([np.concatenate([np.asarray(v) for v in v_r_list]).conj()
                          if v_r_list else np.zeros(0, complex), [1.0]])
    return (phi.conj() @ cascade_reflection(h0, h_list, H0_list)).conj()


def effective_channels(scenario, channels, profiles) -> list[np.ndarray]:
    """One effective channel per user, in ``users_of`` order."""
    out = []
    for g, grp in enumerate(scenario.transmission_groups):
        k = grp.ris_index
        for h in channels.ris_to_trans_user[g]:
            out.append(effective_transmission_channel(h, profiles[k].v_t, channels.bs_to_ris[k]))
    K = len(scenario.star_ris)
    for j, h0 in enumerate(channels.bs_to_refl_user):
        out.append(effective_reflection_channel(
            h0, [channels.ris_to_refl_user[k][j] for k in range(K)],
            [profiles[k].v_r for k in range(K)], channels.bs_to_ris))
    return out


def user_rate(g, beams, desired_stream: int, noise_power: float):
    """SINR and rate (bits/s/Hz) of a user with effective channel ``g``."""
    if not noise_power > 0:
        raise ValueError(f"noise power must be positive, got {noise_power}")
    beams = np.atleast_2d(beams)
    if not 0 <= desired_stream < beams.shape[0]:
        raise ValueError(f"desired stream {desired_stream} out of range")
    gains = np.abs(beams @ np.conj(g)) ** 2
    signal = gains[desired_stream]
    interference = gains.sum() - signal
    sinr = signal / (interference + noise_power)
    return float(sinr), float(np.log2(1.0 + sinr))


@dataclass
class RateReport:
    users: list
    sinr: np.ndarray
    rate: np.ndarray
    margin: np.ndarray
    sum_rate: float

    @property
    def min_margin(self) -> float:
        return float(self.margin.min()) if self.margin.size else 0.0

    @property
    def qos_ok(self) -> bool:
        return self.min_margin >= 0.0

    def to_dict(self) -> dict:
        return {
            "sum_rate": float(self.sum_rate),
            "users": [
                {"side": u.side, "group": u.group, "index": u.member, "label": u.label,
                 "sinr": float(s), "rate": float(r), "margin": float(m)}
                for u, s, r, m in zip(self.users, self.sinr, self.rate, self.margin)
            ],
        }


def evaluate(scenario, channels, profiles, beams, g_list=None) -> RateReport:
    users = users_of(scenario)
    if g_list is None:
        g_list = effective_channels(scenario, channels, profiles)
    noise = scenario.noise_power
    sinr = np.empty(len(users))
    rate = np.empty(len(users))
    for idx, (u, g) in enumerate(zip(users, g_list)):
        sinr[idx], rate[idx] = user_rate(g, beams, u.stream, noise)
    margin = rate - np.array([u.r_min for u in users])
    return RateReport(users, sinr, rate, margin, float(rate.sum()))
