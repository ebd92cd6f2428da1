"""Objects describing the gradient catastrophe point (x, t) = (0, rho).

In the stretched chart xi = x eps^(-3/4) rho^(-1/4), tau = (t - rho) eps^(-1/2)
rho^(-1/2), the regularized solution is driven by the positive integral

    Lambda(xi, tau) = int exp(-2 z^4 + z^2 tau + z xi) dz,

which solves the heat equation in (xi, tau).  The leading local profile is the
logarithmic-derivative image w = -2 Lambda_xi / (phi''(0) Lambda).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError, RangeOverflowError

__all__ = [
    "SingularCoords",
    "to_singular_coords",
    "lambda_eval",
    "lambda_dxi",
    "w10_eval",
]

# exp arguments stay below this after peak subtraction; beyond it Lambda itself
# would overflow a double
_MAX_PEAK_EXPONENT = 690.0
_TRUNCATION_LOG = math.log(1e-18)


@dataclass(frozen=True)
class SingularCoords:
    xi: float
    tau: float


def to_singular_coords(x: float, t: float, epsilon: float, rho: float) -> SingularCoords:
    """Map laboratory coordinates to the stretched chart centered at (0, rho)."""
    if epsilon <= 0 or rho <= 0:
        raise DomainError("epsilon and rho must be positive")
    xi = x * epsilon ** -0.75 * rho ** -0.25
    tau = (t - rho) * epsilon ** -0.5 * rho ** -0.5
    return SingularCoords(xi=xi, tau=tau)


def _exponent(z: float, xi: float, tau: float) -> float:
    return -2.0 * z ** 4 + tau * z * z + xi * z


def _peak_exponent(xi: float, tau: float) -> float:
    """Maximum of the exponent over real z (stationary points of a cubic)."""
    roots = np.roots([-8.0, 0.0, 2.0 * tau, xi])
    real = roots[np.abs(roots.imag) < 1e-9 * (1.0 + np.abs(roots.real))].real
    candidates = [_exponent(z, xi, tau) for z in real] or [_exponent(0.0, xi, tau)]
    return max(candidates)


def _z_cut(xi: float, tau: float, peak: float) -> float:
    """Radius beyond which the integrand is below 1e-18 of its peak."""
    target = peak + _TRUNCATION_LOG

    def envelope(z):
        # even majorant of the exponent
        return -2.0 * z ** 4 + abs(tau) * z * z + abs(xi) * z - target

    hi = 2.0
    while envelope(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise RangeOverflowError("could not bracket the integrand truncation radius")
    return brentq(envelope, 0.0, hi, xtol=1e-10)


def _moment_integrals(xi: float, tau: float, moments: tuple[int, ...]) -> tuple[float, ...]:
    peak = _peak_exponent(xi, tau)
    if peak > _MAX_PEAK_EXPONENT:
        raise RangeOverflowError(
            f"integrand peak exp({peak:.1f}) would overflow; rescale xi/tau before evaluating"
        )
    cut = _z_cut(xi, tau, peak)
    # stationary points make good subdivision hints for the adaptive rule
    roots = np.roots([-8.0, 0.0, 2.0 * tau, xi])
    hints = sorted(float(r.real) for r in roots
                   if abs(r.imag) < 1e-9 * (1.0 + abs(r.real)) and -cut < r.real < cut)
    scale = math.exp(peak) if peak < _MAX_PEAK_EXPONENT else float("inf")
    results = []
    for p in moments:
        value, _ = quad(
            lambda z: z ** p * math.exp(_exponent(z, xi, tau) - peak),
            -cut, cut, points=hints or None, epsabs=1e-13, epsrel=1e-11, limit=200,
        )
        results.append(value * scale)
    return tuple(results)


def lambda_eval(xi: float, tau: float) -> float:
    """The positive integral Lambda(xi, tau); converges for all real arguments."""
    return _moment_integrals(xi, tau, (0,))[0]


def lambda_dxi(xi: float, tau: float) -> float:
    """d Lambda / d xi, computed as a first-moment quadrature (no differencing)."""
    return _moment_integrals(xi, tau, (1,))[0]


def w10_eval(xi: float, tau: float, curvature: float) -> float:
    """Leading local profile -2 Lambda_xi / (curvature * Lambda).

    ``curvature`` is phi''(0); it must be nonzero for the logarithmic-derivative
    construction to apply.
    """
    if curvature == 0:
        raise DomainError("degenerate flux: phi''(0) must be nonzero")
    lam, dlam = _moment_integrals(xi, tau, (0, 1))
    return -2.0 * dlam / (curvature * lam)
