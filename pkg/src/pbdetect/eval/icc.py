"""Two-way mixed, absolute-agreement intraclass correlation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IccResult:
    icc_single: float  # ICC(A,1)
    icc_average: float  # ICC(A,k)
    ms_rows: float
    ms_columns: float
    ms_error: float
    n: int
    k: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def anova_mean_squares(scores: np.ndarray) -> tuple[float, float, float]:
    """Rows, columns and residual mean squares of a two-way layout without replication."""
    x = np.asarray(scores, dtype=np.float64)
    n, k = x.shape
    grand = x.mean()
    ss_rows = k * np.sum((x.mean(axis=1) - grand) ** 2)
    ss_cols = n * np.sum((x.mean(axis=0) - grand) ** 2)
    ss_total = np.sum((x - grand) ** 2)
    ss_err = max(ss_total - ss_rows - ss_cols, 0.0)
    return ss_rows / (n - 1), ss_cols / (k - 1), ss_err / ((n - 1) * (k - 1))


def icc_two_way_mixed_absolute(scores) -> IccResult:
    """``scores`` is an (n targets, k raters) matrix with no missing cells."""
    x = np.asarray(scores, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise ValueError(f"need an n x k matrix with n >= 2 and k >= 2, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("scores contain missing or non-finite cells")
    if np.all(x == x.flat[0]):
        raise ValueError("ICC undefined for a constant matrix (zero variance)")
    n, k = x.shape
    msr, msc, mse = anova_mean_squares(x)
    den_single = msr + (k - 1) * mse + (k / n) * (msc - mse)
    den_average = msr + (msc - mse) / n
    if den_single == 0 or den_average == 0:
        raise ValueError("ICC undefined: zero denominator")
    single = (msr - mse) / den_single
    average = (msr - mse) / den_average
    return IccResult(float(single), float(average), float(msr), float(msc), float(mse), n, k)
