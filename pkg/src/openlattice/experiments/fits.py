"""Least-squares fits used by the experiments."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

ZERO_FLOOR = 1e-14


@dataclass
class LineFit:
    slope: float
    intercept: float
    rss: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def affine_fit(x, y) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("an affine fit needs at least two points")
    slope, intercept = np.polyfit(x, y, 1)
    rss = float(np.sum((y - (slope * x + intercept)) ** 2))
    return LineFit(float(slope), float(intercept), rss, int(x.size))


def r_squared(x, y, fit: LineFit) -> float:
    y = np.asarray(y, dtype=float)
    tss = float(np.sum((y - y.mean()) ** 2))
    return 1.0 if tss == 0 else 1.0 - fit.rss / tss


def _positive(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = y > ZERO_FLOOR
    return x[keep], y[keep]


def loglinear_fit(x, y) -> LineFit | None:
    """``log y = a + b x`` on entries with ``y > 1e-14``; ``None`` below two points."""
    x, y = _positive(x, y)
    return affine_fit(x, np.log(y)) if x.size >= 2 else None


def loglog_fit(x, y) -> LineFit | None:
    """``log y = a + b log x`` on entries with ``x > 0`` and ``y > 1e-14``."""
    x, y = _positive(x, y)
    keep = x > 0
    x, y = x[keep], y[keep]
    return affine_fit(np.log(x), np.log(y)) if x.size >= 2 else None


def aic(rss: float, n: int, k: int = 2) -> float:
    return n * math.log(max(rss, 1e-300) / n) + 2 * k


def classify_decay(x, y) -> dict:
    """Exponential vs polynomial decay by comparing AIC of the two fits.

    Needs at least four positive points; otherwise the class is
    ``"undetermined"``.
    """
    xp, yp = _positive(x, y)
    xp, yp = xp[xp > 0], yp[xp > 0]
    out = {"class": "undetermined", "points": int(xp.size)}
    if xp.size < 4:
        return out
    lin, log = loglinear_fit(xp, yp), loglog_fit(xp, yp)
    a_lin, a_log = aic(lin.rss, lin.n), aic(log.rss, log.n)
    out.update(exponential_rate=-lin.slope, polynomial_degree=-log.slope, aic_exponential=a_lin,
               aic_polynomial=a_log, **{"class": "exponential" if a_lin <= a_log else "polynomial"})
    return out


@dataclass
class MixingLawFit:
    """``log D = log c + delta log N - gamma t``."""

    c: float
    gamma: float
    delta: float
    residual: float
    max_excess: float

    def to_dict(self) -> dict:
        return asdict(self)


def fit_mixing_law(sizes, times, distances) -> MixingLawFit:
    """Least squares on ``log D`` over all positive points.

    ``max_excess`` is the largest amount by which a measured ``log D`` sits
    above the fitted plane; ``c * exp(max_excess)`` makes the curve an upper
    envelope of the data.
    """
    n = np.asarray(sizes, dtype=float)
    t = np.asarray(times, dtype=float)
    d = np.asarray(distances, dtype=float)
    keep = d > ZERO_FLOOR
    n, t, d = n[keep], t[keep], d[keep]
    if n.size < 3:
        raise ValueError("need at least three positive distances")
    varied = np.unique(n).size > 1
    cols = [np.ones_like(t), -t] + ([np.log(n)] if varied else [])
    a = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(a, np.log(d), rcond=None)
    resid = np.log(d) - a @ coef
    delta = float(coef[2]) if varied else 0.0
    return MixingLawFit(float(np.exp(coef[0])), float(coef[1]), delta,
                        float(np.sqrt(np.mean(resid ** 2))), float(resid.max()))


def crossing_time(times, values, level: float) -> float | None:
    """First time at which ``values`` falls to ``level``, log-linear interpolation."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if v[0] <= level:
        return float(t[0])
    for k in range(1, t.size):
        if v[k] <= level:
            lo, hi = math.log(max(v[k - 1], ZERO_FLOOR)), math.log(max(v[k], ZERO_FLOOR))
            frac = (lo - math.log(level)) / (lo - hi) if lo != hi else 1.0
            return float(t[k - 1] + frac * (t[k] - t[k - 1]))
    return None
