"""SINR-to-throughput mapping and the relative throughput change it implies.

Adaptive modulation and coding is abstracted as a monotone step table from
SINR to spectral efficiency. The primary network's sensitivity to
secondary interference is the closed form

    T% = -(1/xi) * log2(1 + gap * 10^(I/10))

with I the secondary interference expressed in dB relative to the
background noise power.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

__all__ = [
    "AmcTable",
    "throughput",
    "relative_throughput_change",
    "shannon_reference_table",
]


@dataclass(frozen=True)
class AmcTable:
    """Step map from SINR (dB thresholds) to spectral efficiency (b/s/Hz).

    xi is the primary-link spectral efficiency with no secondary
    transmission and gap the SNR gap of practical coding; both enter only
    the relative-throughput-change formula.
    """

    snr_thresholds_db: np.ndarray
    spectral_efficiencies: np.ndarray
    bandwidth_hz: float = 180_000.0
    snr_gap: float = 1.0
    xi: float = 4.0

    def __post_init__(self):
        thr = np.asarray(self.snr_thresholds_db, dtype=float)
        eff = np.asarray(self.spectral_efficiencies, dtype=float)
        if thr.size == 0:
            raise ValueError("AMC table is empty")
        if thr.size != eff.size:
            raise ValueError("thresholds and efficiencies differ in length")
        if np.any(np.diff(thr) <= 0):
            raise ValueError("SNR thresholds must be strictly increasing")
        if np.any(eff < 0) or np.any(np.diff(eff) < 0):
            raise ValueError("efficiencies must be nonnegative and nondecreasing")
        if self.xi <= 0:
            raise ValueError("xi must be positive")
        object.__setattr__(self, "snr_thresholds_db", thr)
        object.__setattr__(self, "spectral_efficiencies", eff)

    @property
    def max_throughput_mbps(self) -> float:
        return float(self.spectral_efficiencies[-1]) * self.bandwidth_hz / 1e6

    @staticmethod
    def from_csv(path, **kwargs) -> "AmcTable":
        """Load rows from a CSV with header ``snr_db,spectral_efficiency``."""
        thresholds, efficiencies = [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                thresholds.append(float(row["snr_db"]))
                efficiencies.append(float(row["spectral_efficiency"]))
        return AmcTable(np.array(thresholds), np.array(efficiencies), **kwargs)

    @staticmethod
    def default(**kwargs) -> "AmcTable":
        """The packaged 15-row CQI-like table (-6..20 dB, 0.15..6 b/s/Hz)."""
        ref = resources.files("crpower").joinpath("data/default_amc.csv")
        with resources.as_file(ref) as path:
            return AmcTable.from_csv(path, **kwargs)


def throughput(sinr: float, table: AmcTable) -> float:
    """Throughput in Mbps of the best AMC mode the SINR supports.

    Zero below the lowest threshold; the table is evaluated on the SINR in
    dB, so sinr must be a nonnegative linear ratio.
    """
    if sinr < 0:
        raise ValueError("SINR must be a nonnegative linear ratio")
    if sinr == 0.0:
        return 0.0
    sinr_db = 10.0 * np.log10(sinr)
    idx = int(np.searchsorted(table.snr_thresholds_db, sinr_db, side="right")) - 1
    if idx < 0:
        return 0.0
    return float(table.spectral_efficiencies[idx]) * table.bandwidth_hz / 1e6


def relative_throughput_change(interference_over_noise_db: float,
                               table: AmcTable) -> float:
    """Fractional primary throughput change caused by secondary interference.

    Always <= 0; -inf interference (no secondary transmission) gives 0.
    """
    ratio = 10.0 ** (np.float64(interference_over_noise_db) / 10.0)
    return float(-np.log2(1.0 + table.snr_gap * ratio) / table.xi)


def shannon_reference_table(snr_gap: float = 1.0,
                            snr_min_db: float = -10.0,
                            snr_max_db: float = 40.0,
                            n_rows: int = 2000,
                            bandwidth_hz: float = 180_000.0,
                            xi: float = 4.0,
                            max_efficiency: float | None = 6.0) -> AmcTable:
    """Dense table tracking the gap-adjusted Shannon curve log2(1 + snr/gap).

    Useful as an idealized AMC reference: with enough rows the step map
    approaches the continuous curve. max_efficiency caps the top mode the
    way a real modulation set saturates (pass None for pure Shannon).
    """
    thr = np.linspace(snr_min_db, snr_max_db, n_rows)
    eff = np.log2(1.0 + (10.0 ** (thr / 10.0)) / snr_gap)
    if max_efficiency is not None:
        eff = np.minimum(eff, max_efficiency)
    return AmcTable(thr, eff, bandwidth_hz=bandwidth_hz, snr_gap=snr_gap, xi=xi)
