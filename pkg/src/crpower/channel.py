"""Channel gains and SINR arithmetic.

Gains follow a log-distance loss model with fixed penetration loss and
lognormal shadowing; every internal power is linear mW and conversions to
dB happen only at the boundaries. SINR helpers are pure functions so the
exhaustive-search oracle can reuse them unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .topology import GridSpec, NodePlacement, pairwise_wrap_distances

__all__ = [
    "ChannelGains",
    "PowerVector",
    "path_gain",
    "build_gains",
    "pn_sinr",
    "sn_sinr",
    "dbm_to_mw",
    "mw_to_dbm",
]

# Loss model constants: fixed offset + distance slope (d in km) + penetration.
PATHLOSS_OFFSET_DB = 128.1
PATHLOSS_SLOPE_DB = 37.6
PENETRATION_LOSS_DB = 10.0
SHADOWING_STD_DB = 6.0

NOISE_POWER_MW = 1e-13          # -130 dBm AWGN on every link
PN_POWER_MIN_DBM = -20.0
PN_POWER_MAX_DBM = 40.0


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(np.asarray(mw, dtype=float))


def path_gain(distance_m: float, shadowing_db: float = 0.0) -> float:
    """Linear power gain of one link.

    loss_dB = 128.1 + 37.6*log10(d_km) + 10 + S, with the distance clamped
    to 1 m below that.
    """
    if not (np.isfinite(distance_m) and np.isfinite(shadowing_db)):
        raise ValueError("distance and shadowing must be finite")
    d_km = max(float(distance_m), 1.0) / 1000.0
    loss_db = (PATHLOSS_OFFSET_DB + PATHLOSS_SLOPE_DB * np.log10(d_km)
               + PENETRATION_LOSS_DB + shadowing_db)
    return float(10.0 ** (-loss_db / 10.0))


@dataclass(frozen=True)
class ChannelGains:
    """Linear gains between every transmitter/receiver pair of interest.

    Indexing is [transmitter, receiver]:
      g_pp[m, k]  active AP m   -> PN receiver k
      g_ps[j, k]  CR tx j       -> PN receiver k
      g_ss[j, i]  CR tx j       -> CR receiver i
      g_sp[m, i]  active AP m   -> CR receiver i
    """

    g_pp: np.ndarray
    g_ps: np.ndarray
    g_ss: np.ndarray
    g_sp: np.ndarray
    noise_power_mw: float = NOISE_POWER_MW

    def __post_init__(self):
        m = self.g_pp.shape[0]
        n = self.g_ss.shape[0]
        if self.g_pp.shape != (m, m) or self.g_ss.shape != (n, n):
            raise ValueError("g_pp and g_ss must be square")
        if self.g_ps.shape != (n, m) or self.g_sp.shape != (m, n):
            raise ValueError("cross matrices inconsistent with g_pp/g_ss")
        for name in ("g_pp", "g_ps", "g_ss", "g_sp"):
            g = getattr(self, name)
            if np.any(g <= 0.0) or np.any(g > 1.0):
                raise ValueError(f"{name} entries must lie in (0, 1]")
        if self.noise_power_mw <= 0:
            raise ValueError("noise power must be positive")

    @property
    def n_pn(self) -> int:
        return self.g_pp.shape[0]

    @property
    def n_cr(self) -> int:
        return self.g_ss.shape[0]

    def to_json(self) -> str:
        return json.dumps({
            "g_pp": self.g_pp.tolist(),
            "g_ps": self.g_ps.tolist(),
            "g_ss": self.g_ss.tolist(),
            "g_sp": self.g_sp.tolist(),
            "noise_power_mw": self.noise_power_mw,
        }, indent=2)

    @staticmethod
    def from_json(text: str) -> "ChannelGains":
        doc = json.loads(text)
        return ChannelGains(
            g_pp=np.asarray(doc["g_pp"], dtype=float),
            g_ps=np.asarray(doc["g_ps"], dtype=float),
            g_ss=np.asarray(doc["g_ss"], dtype=float),
            g_sp=np.asarray(doc["g_sp"], dtype=float),
            noise_power_mw=float(doc["noise_power_mw"]),
        )


@dataclass(frozen=True)
class PowerVector:
    """Transmit powers of one step: PN in dBm, CR in mW (0.0 means off)."""

    pn_powers_dbm: np.ndarray
    cr_powers_mw: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pn_powers_dbm, dtype=float)
        if np.any(p < PN_POWER_MIN_DBM - 1e-9) or np.any(p > PN_POWER_MAX_DBM + 1e-9):
            raise ValueError("PN powers outside [-20, 40] dBm")
        if np.any(np.asarray(self.cr_powers_mw) < 0.0):
            raise ValueError("CR powers must be nonnegative mW")

    @property
    def pn_powers_mw(self) -> np.ndarray:
        return dbm_to_mw(self.pn_powers_dbm)


def _shadowing(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.normal(0.0, SHADOWING_STD_DB, size=shape)


def build_gains(placement: NodePlacement, rng: np.random.Generator,
                noise_power_mw: float = NOISE_POWER_MW) -> ChannelGains:
    """Frozen gains for one scenario.

    Shadowing is drawn once per transmitter-receiver pair and never
    re-sampled; the same loss model applies to all four link classes.
    Gains are capped at 1 (no amplification through shadowing).
    """
    spec: GridSpec = placement.grid
    ap = placement.active_ap_positions
    pn_rx = placement.pn_rx_positions
    cr_tx = placement.cr_tx_positions
    cr_rx = placement.cr_rx_positions

    def gains(tx, rx):
        d = pairwise_wrap_distances(tx, rx, spec)
        d_km = np.maximum(d, 1.0) / 1000.0
        loss = (PATHLOSS_OFFSET_DB + PATHLOSS_SLOPE_DB * np.log10(d_km)
                + PENETRATION_LOSS_DB + _shadowing(rng, d.shape))
        return np.minimum(10.0 ** (-loss / 10.0), 1.0)

    return ChannelGains(
        g_pp=gains(ap, pn_rx),
        g_ps=gains(cr_tx, pn_rx),
        g_ss=gains(cr_tx, cr_rx),
        g_sp=gains(ap, cr_rx),
        noise_power_mw=noise_power_mw,
    )


def pn_sinr(link: int, gains: ChannelGains, powers: PowerVector) -> float:
    """SINR of one primary link: own AP over other APs + all CRs + noise."""
    pn_mw = powers.pn_powers_mw
    cr_mw = np.asarray(powers.cr_powers_mw, dtype=float)
    if pn_mw.shape[0] != gains.n_pn or cr_mw.shape[0] != gains.n_cr:
        raise ValueError("power vector does not match gain matrices")
    signal = gains.g_pp[link, link] * pn_mw[link]
    cross = float(gains.g_pp[:, link] @ pn_mw) - signal
    sn_interf = float(gains.g_ps[:, link] @ cr_mw)
    return signal / (cross + sn_interf + gains.noise_power_mw)


def sn_sinr(link: int, gains: ChannelGains, powers: PowerVector) -> float:
    """SINR of one secondary link: own CR over other CRs + all APs + noise."""
    pn_mw = powers.pn_powers_mw
    cr_mw = np.asarray(powers.cr_powers_mw, dtype=float)
    if pn_mw.shape[0] != gains.n_pn or cr_mw.shape[0] != gains.n_cr:
        raise ValueError("power vector does not match gain matrices")
    signal = gains.g_ss[link, link] * cr_mw[link]
    cross = float(gains.g_ss[:, link] @ cr_mw) - signal
    pn_interf = float(gains.g_sp[:, link] @ pn_mw)
    return signal / (cross + pn_interf + gains.noise_power_mw)


def all_sinrs(gains: ChannelGains, powers: PowerVector) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (pn_sinrs, sn_sinrs) for one power assignment."""
    pn_mw = powers.pn_powers_mw
    cr_mw = np.asarray(powers.cr_powers_mw, dtype=float)

    pn_signal = np.diag(gains.g_pp) * pn_mw
    pn_total = gains.g_pp.T @ pn_mw
    sn_at_pn = gains.g_ps.T @ cr_mw
    pn = pn_signal / (pn_total - pn_signal + sn_at_pn + gains.noise_power_mw)

    sn_signal = np.diag(gains.g_ss) * cr_mw
    sn_total = gains.g_ss.T @ cr_mw
    pn_at_sn = gains.g_sp.T @ pn_mw
    sn = sn_signal / (sn_total - sn_signal + pn_at_sn + gains.noise_power_mw)
    return pn, sn
