"""Escape-rate laws and Arrhenius fits.

Two rate forms live here.  The classical double-well rate

    k = sqrt(U''(min) |U''(saddle)|) / (2 pi) * exp(-dU / D)

is the physical reference the simulators are checked against.  The
complexity form ``prefactor * exp(-delta_c / D)`` expresses the same law
with a curvature-corrected barrier; the two coincide when delta_c is the
barrier of the effective potential and the prefactor absorbs the
curvature of the starting well (see the identity tests).

The exponent convention matters: passage times fitted against 1/D give a
slope equal to the barrier under the exp(-delta/D) form, and half of it
under the exp(-delta/2D) static-factor form.  Fits report the slope; the
sweep driver publishes the barrier under both conventions rather than
pretending the choice is settled.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from .errors import ContractError


def kramers_rate_complexity(delta_c, D, prefactor):
    """Rate = prefactor * exp(-delta_c / D)."""
    if not (np.isfinite(D) and D > 0):
        raise ContractError("D must be positive")
    if not (np.isfinite(prefactor) and prefactor > 0):
        raise ContractError("prefactor must be positive")
    if not np.isfinite(delta_c):
        raise ContractError("delta_c must be finite")
    return float(prefactor * np.exp(-delta_c / D))


def kramers_double_well(p, D, min_loc, saddle_loc):
    """Classical escape rate of ``p`` from min_loc over saddle_loc.

    Requires positive curvature at the minimum and negative curvature at
    the saddle; anything else is a caller error, not a zero rate.
    """
    if not (np.isfinite(D) and D > 0):
        raise ContractError("D must be positive")
    c_min = float(p.hessian(min_loc)[0, 0]) if p.dim == 1 else _along_unstable(p, min_loc)
    c_sad = float(p.hessian(saddle_loc)[0, 0]) if p.dim == 1 else _along_unstable(p, saddle_loc)
    if c_min <= 0:
        raise ContractError(f"curvature at the minimum must be positive, got {c_min:.3g}")
    if c_sad >= 0:
        raise ContractError(f"curvature at the saddle must be negative, got {c_sad:.3g}")
    dU = p.value(saddle_loc) - p.value(min_loc)
    if dU <= 0:
        raise ContractError("saddle must sit above the minimum")
    return float(np.sqrt(c_min * abs(c_sad)) / (2.0 * np.pi) * np.exp(-dU / D))


def _along_unstable(p, w):
    # 1-D formula only; higher dimensions would need the full eigenstructure
    raise ContractError("kramers_double_well supports 1-D potentials only")


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(time) against a barrier-like abscissa."""

    slope: float
    intercept: float
    r2: float
    points: list  # (x, mean_time) pairs actually fitted

    def predict(self, x):
        return np.exp(self.intercept + self.slope * np.asarray(x, dtype=float))

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "points": [[float(a), float(b)] for a, b in self.points],
        }


def arrhenius_fit(points):
    """Fit log(mean_time) = slope * x + intercept over (x, mean_time) pairs.

    Needs at least 3 points with positive times and non-degenerate x.
    Callers fitting barrier laws pass x = 1/D, in which case the slope is
    the barrier under the exp(-barrier/D) convention.
    """
    pts = [(float(x), float(t)) for x, t in points]
    if len(pts) < 3:
        raise ContractError("need at least 3 points")
    xs = np.array([x for x, _ in pts])
    ts = np.array([t for _, t in pts])
    if np.any(ts <= 0):
        raise ContractError("times must be positive")
    if np.std(xs) == 0:
        raise ContractError("x values are degenerate")
    fit = linregress(xs, np.log(ts))
    return RateFit(float(fit.slope), float(fit.intercept), float(fit.rvalue**2), pts)
