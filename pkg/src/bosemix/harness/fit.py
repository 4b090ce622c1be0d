"""Log-log rate fits of sweep quantities against N1."""

import csv
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

FLOOR = 1e-14

# quantities that are derived from columns rather than read directly
_DERIVED = {"a1+a2": lambda row: float(row["a1"]) + float(row["a2"])}


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class RateFit:
    quantity: str
    t: float
    theta: float
    N1: Tuple[int, ...]
    values: Tuple[float, ...]
    slope: float
    intercept: float
    slope_stderr: float
    residual: float
    predicted: Optional[float]
    floored: bool

    @property
    def deviation(self) -> Optional[float]:
        return None if self.predicted is None else self.slope - self.predicted


def predicted_exponent(quantity: str, theta: float) -> Optional[float]:
    if quantity == "trace_norm":
        return -(1 - theta) / 2
    if quantity in ("a1+a2", "a1", "a2"):
        return -1.0
    return None


def fit_power_law(N1, values, floor: float = FLOOR):
    """(slope, intercept, slope stderr, rms residual, floored) of log q = s log N1 + c."""
    N1 = np.asarray(N1, dtype=float)
    q = np.asarray(values, dtype=float)
    if N1.size < 3:
        raise FitError(f"need at least 3 N-points, got {N1.size}")
    if np.unique(N1).size != N1.size:
        raise FitError("duplicate N1 values")
    floored = bool(np.any(q <= floor))
    y = np.log(np.maximum(q, floor))
    x = np.log(N1)
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - X @ coef
    dof = max(x.size - 2, 1)
    sigma2 = float(res @ res) / dof
    stderr = float(np.sqrt(sigma2 / np.sum((x - x.mean()) ** 2)))
    rms = float(np.sqrt(np.mean(res**2)))
    if not np.isfinite(coef[0]):
        raise FitError("slope is not finite")
    return float(coef[0]), float(coef[1]), stderr, rms, floored


def read_sweep(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def fit_rate(csv_path, quantity: str, t: float, theta: float = 0.0, floor: float = FLOOR) -> RateFit:
    """Fit `quantity` at time t (and theta) against N1 across the sweep points."""
    rows = read_sweep(csv_path)
    if not rows:
        raise FitError(f"{csv_path} has no rows")
    if quantity not in _DERIVED and quantity not in rows[0]:
        raise FitError(f"unknown quantity {quantity!r}")
    get = _DERIVED.get(quantity, lambda row: float(row[quantity]))
    picked = {}
    for row in rows:
        if np.isclose(float(row["t"]), t, atol=1e-12) and np.isclose(float(row["theta"]), theta, atol=1e-12):
            picked.setdefault(int(row["N1"]), get(row))
    if len(picked) < 3:
        raise FitError(f"only {len(picked)} N-points at t={t}, theta={theta}; need 3")
    N1 = tuple(sorted(picked))
    vals = tuple(picked[n] for n in N1)
    slope, icpt, err, rms, floored = fit_power_law(N1, vals, floor)
    return RateFit(quantity, t, theta, N1, vals, slope, icpt, err, rms,
                   predicted_exponent(quantity, theta), floored)
