"""Problem definition: flux, step-like initial data, parameters, limit solution.

The governing equation is  u_t + phi(u)_x = epsilon * u_xx  with initial data
u(x, 0) = nu(x / rho), where nu is bounded and smooth and approaches constant
states nu0_minus / nu0_plus at -/+ infinity with algebraic tail expansions

    nu(sigma) ~ sum_m  nu_m^{+-} / sigma^m,   sigma -> +-infinity.

The small-parameter regime of interest is mu = rho / epsilon -> 0 with a shock
configuration nu0_minus > nu0_plus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.special import erfc

from .errors import DegenerateShockError, DomainError, UsageError

__all__ = [
    "FluxModel",
    "TailInitialData",
    "ProblemInstance",
    "burgers_flux",
    "cubic_flux",
    "polynomial_flux",
    "step_data",
    "smoothstep_data",
    "erfstep_data",
    "shock_speed",
    "limit_solution",
    "validate_problem",
]

_FALLING = math.perm  # falling factorial j! / (j-k)!


def _poly_derivative_fn(coeffs: Sequence) -> Callable:
    """Derivative evaluator for phi(u) = sum_j coeffs[j] * u**j, any order.

    Exact-type preserving: Fraction coefficients with Fraction arguments stay
    rational; numpy arrays are evaluated with float coefficients.
    """
    coeffs = tuple(coeffs)

    def derivative(order: int, u):
        derived = [coeffs[j] * _FALLING(j, order) for j in range(order, len(coeffs))]
        if not derived:
            return np.zeros_like(u, dtype=float) if isinstance(u, np.ndarray) else 0 * u
        if isinstance(u, np.ndarray):
            acc = np.zeros_like(u, dtype=float)
            for c in reversed(derived):
                acc = acc * u + float(c)
            return acc
        acc = derived[-1]
        for c in reversed(derived[:-1]):
            acc = acc * u + c
        return acc

    return derivative


@dataclass(frozen=True)
class FluxModel:
    """Flux phi with exact derivatives of arbitrary requested order.

    ``derivative_fn(order, u)`` must return the exact order-th derivative and
    accept scalars and numpy arrays.  ``max_order`` is None when every order
    is available (polynomial fluxes), otherwise the largest exact order.
    """

    name: str
    derivative_fn: Callable
    max_order: int | None = None

    def eval(self, u):
        return self.derivative_fn(0, u)

    def derivative(self, order: int, u):
        if order < 0:
            raise UsageError("derivative order must be >= 0")
        if self.max_order is not None and order > self.max_order:
            raise UsageError(
                f"flux '{self.name}' provides derivatives up to order {self.max_order}, got {order}"
            )
        return self.derivative_fn(order, u)


def polynomial_flux(coeffs: Sequence, name: str = "polynomial") -> FluxModel:
    """Flux from ascending polynomial coefficients; all derivative orders exact."""
    return FluxModel(name=name, derivative_fn=_poly_derivative_fn(coeffs), max_order=None)


def burgers_flux(exact: bool = False) -> FluxModel:
    """phi(u) = u^2 / 2."""
    half = Fraction(1, 2) if exact else 0.5
    return polynomial_flux((0, 0, half), name="burgers")


def cubic_flux(exact: bool = False) -> FluxModel:
    """phi(u) = u^2/2 + u^3/6 (non-vanishing third derivative)."""
    if exact:
        return polynomial_flux((0, 0, Fraction(1, 2), Fraction(1, 6)), name="cubic")
    return polynomial_flux((0, 0, 0.5, 1.0 / 6.0), name="cubic")


class _CumulativePrimitive:
    """Primitive of nu built once by cumulative quadrature, with tail closed forms.

    Inside |sigma| <= span the primitive is integrated numerically; beyond, the
    algebraic tail expansion of nu is integrated term by term.
    """

    def __init__(self, data: "TailInitialData", span: float = 1.0e3):
        self.data = data
        self.span = span
        sol_p = solve_ivp(
            lambda s, y: [float(data.eval(s))], (0.0, span), [0.0],
            rtol=1e-11, atol=1e-12, dense_output=True, method="DOP853",
        )
        sol_m = solve_ivp(
            lambda s, y: [float(data.eval(s))], (0.0, -span), [0.0],
            rtol=1e-11, atol=1e-12, dense_output=True, method="DOP853",
        )
        self._sol_p, self._sol_m = sol_p, sol_m

    def _tail_integral(self, side: str, a: float, b: float) -> float:
        # integral of the tail partial sum of nu over [a, b], 0 < a < b or a < b < 0
        total = 0.0
        for m in range(self.data.tail_order):
            c = self.data.tail_coeff(side, m)
            if c == 0:
                continue
            if m == 0:
                total += c * (b - a)
            elif m == 1:
                total += c * (math.log(abs(b)) - math.log(abs(a)))
            else:
                total += c * (b ** (1 - m) - a ** (1 - m)) / (1 - m)
        return total

    def __call__(self, sigma: float) -> float:
        s = float(sigma)
        if s >= 0:
            if s <= self.span:
                return float(self._sol_p.sol(s)[0])
            return float(self._sol_p.sol(self.span)[0]) + self._tail_integral("plus", self.span, s)
        if s >= -self.span:
            return float(self._sol_m.sol(s)[0])
        return float(self._sol_m.sol(-self.span)[0]) + self._tail_integral("minus", -self.span, s)


@dataclass(frozen=True)
class TailInitialData:
    """Bounded smooth initial profile nu with its one-sided tail coefficients.

    ``tail_minus`` / ``tail_plus`` hold nu_m for m = 0 .. tail_order-1.  The
    optional closed forms (primitive, exact heat evolution) are used by the
    reference solvers when available; ``breakpoints`` lists points where nu is
    not smooth (the pure step), so quadratures can split there.
    """

    name: str
    eval_fn: Callable
    tail_minus: tuple
    tail_plus: tuple
    bound: float
    primitive_fn: Callable | None = None
    h0_closed_fn: Callable | None = None
    breakpoints: tuple = ()
    _primitive_cache: list = field(default_factory=list, repr=False, compare=False)

    def eval(self, sigma):
        return self.eval_fn(sigma)

    def tail_coeff(self, side: str, m: int):
        if side not in ("minus", "plus"):
            raise UsageError(f"side must be 'minus' or 'plus', got {side!r}")
        if m < 0:
            raise UsageError("tail coefficient index must be >= 0")
        coeffs = self.tail_minus if side == "minus" else self.tail_plus
        if m >= len(coeffs):
            raise UsageError(
                f"initial data '{self.name}' provides {len(coeffs)} tail coefficients per side"
            )
        return coeffs[m]

    @property
    def tail_order(self) -> int:
        return min(len(self.tail_minus), len(self.tail_plus))

    def primitive(self, sigma):
        """Integral of nu from 0 to sigma (closed form when available)."""
        if self.primitive_fn is not None:
            return self.primitive_fn(sigma)
        if not self._primitive_cache:
            self._primitive_cache.append(_CumulativePrimitive(self))
        table = self._primitive_cache[0]
        if isinstance(sigma, np.ndarray):
            return np.array([table(s) for s in np.ravel(sigma)]).reshape(np.shape(sigma))
        return table(float(sigma))


def step_data(nu_minus: float, nu_plus: float, tail_order: int = 8) -> TailInitialData:
    """Pure step: nu_minus for sigma < 0, nu_plus for sigma >= 0."""
    d = nu_minus - nu_plus

    def evaluate(sigma):
        return np.where(np.asarray(sigma, dtype=float) < 0, nu_minus, nu_plus)[()]

    def primitive(sigma):
        s = np.asarray(sigma, dtype=float)
        return (np.where(s < 0, nu_minus, nu_plus) * s)[()]

    def h0_closed(sigma, omega):
        z = np.asarray(sigma, dtype=float) / (2.0 * np.sqrt(omega))
        return (nu_plus + d * 0.5 * erfc(z))[()]

    zeros = (0,) * (tail_order - 1)
    return TailInitialData(
        name="step",
        eval_fn=evaluate,
        tail_minus=(nu_minus,) + zeros,
        tail_plus=(nu_plus,) + zeros,
        bound=max(abs(nu_minus), abs(nu_plus)),
        primitive_fn=primitive,
        h0_closed_fn=h0_closed,
        breakpoints=(0.0,),
    )


def smoothstep_data(nu_minus: float, nu_plus: float, tail_order: int = 8) -> TailInitialData:
    """Smooth step (nu_plus+nu_minus)/2 + (nu_plus-nu_minus) * arctan(sigma) / pi.

    Tail coefficients come from the large-argument arctan series: odd powers of
    1/sigma with alternating signs, identical on both sides; even powers vanish.
    """
    mean = 0.5 * (nu_plus + nu_minus)
    d = nu_plus - nu_minus

    def evaluate(sigma):
        return mean + d * np.arctan(sigma) / np.pi

    def primitive(sigma):
        s = np.asarray(sigma, dtype=float)
        return (mean * s + (d / np.pi) * (s * np.arctan(s) - 0.5 * np.log1p(s * s)))[()]

    # arctan(s) = +-pi/2 - 1/s + 1/(3 s^3) - 1/(5 s^5) + ...   (s -> +-inf)
    tails = [0.0] * tail_order
    sign = -1.0
    for m in range(1, tail_order, 2):
        tails[m] = sign * d / (np.pi * m)
        sign = -sign
    tail_plus = (nu_plus,) + tuple(tails[1:])
    tail_minus = (nu_minus,) + tuple(tails[1:])
    return TailInitialData(
        name="smoothstep",
        eval_fn=evaluate,
        tail_minus=tail_minus,
        tail_plus=tail_plus,
        bound=max(abs(nu_minus), abs(nu_plus)),
        primitive_fn=primitive,
    )


def erfstep_data(nu_minus: float, nu_plus: float, width: float = 1.0,
                 tail_order: int = 8) -> TailInitialData:
    """Step mollified by a Gaussian of the given width.

    All algebraic tail coefficients beyond the limits vanish, and the heat
    evolution has the closed form of a re-scaled smoothed step, which makes
    this profile a convenient exactness oracle.
    """
    tau0 = width * width
    a = 2.0 * math.sqrt(tau0)
    d = nu_minus - nu_plus
    inv_sqrt_pi = 1.0 / math.sqrt(math.pi)

    def evaluate(sigma):
        return nu_plus + d * 0.5 * erfc(np.asarray(sigma, dtype=float) / a)

    def primitive(sigma):
        x = np.asarray(sigma, dtype=float) / a
        f = x * 0.5 * erfc(x) - 0.5 * inv_sqrt_pi * np.exp(-x * x)
        return (nu_plus * np.asarray(sigma, dtype=float) + d * a * (f + 0.5 * inv_sqrt_pi))[()]

    def h0_closed(sigma, omega):
        z = np.asarray(sigma, dtype=float) / (2.0 * np.sqrt(omega + tau0))
        return (nu_plus + d * 0.5 * erfc(z))[()]

    zeros = (0.0,) * (tail_order - 1)
    return TailInitialData(
        name="erfstep",
        eval_fn=evaluate,
        tail_minus=(nu_minus,) + zeros,
        tail_plus=(nu_plus,) + zeros,
        bound=max(abs(nu_minus), abs(nu_plus)),
        primitive_fn=primitive,
        h0_closed_fn=h0_closed,
    )


@dataclass(frozen=True)
class ProblemInstance:
    """Full problem instance: flux, initial profile, viscosity, data scale."""

    flux: FluxModel
    init: TailInitialData
    epsilon: float
    rho: float

    def mu(self) -> float:
        return self.rho / self.epsilon

    @property
    def nu_minus0(self) -> float:
        return float(self.init.tail_coeff("minus", 0))

    @property
    def nu_plus0(self) -> float:
        return float(self.init.tail_coeff("plus", 0))


def shock_speed(flux: FluxModel, nu_minus0, nu_plus0):
    """Jump-condition speed: chord slope of the flux between the two states."""
    if nu_minus0 == nu_plus0:
        raise DegenerateShockError("equal states: shock speed undefined")
    f_minus = flux.eval(nu_minus0)
    f_plus = flux.eval(nu_plus0)
    for v in (f_minus, f_plus):
        if not math.isfinite(float(v)):
            raise DomainError("flux evaluated to a non-finite value")
    c = (f_plus - f_minus) / (nu_plus0 - nu_minus0)
    if nu_minus0 > nu_plus0:
        # convexity puts the chord slope strictly between the edge slopes
        if not (flux.derivative(1, nu_plus0) < c < flux.derivative(1, nu_minus0)):
            raise DomainError("chord slope not between edge slopes; flux not convex here")
    return c


def limit_solution(problem: ProblemInstance, x: float, t: float) -> float:
    """Inviscid limit: left state behind the shock line x = c t, right state on it and ahead."""
    if t < 0:
        raise DomainError("t must be >= 0")
    c = shock_speed(problem.flux, problem.nu_minus0, problem.nu_plus0)
    return problem.nu_minus0 if x < c * t else problem.nu_plus0


def _tail_partial_sum(init: TailInitialData, side: str, sigma: float) -> float:
    total = 0.0
    for m in range(init.tail_order):
        total += float(init.tail_coeff(side, m)) * sigma ** (-m)
    return total


def validate_problem(problem: ProblemInstance, n_convexity_samples: int = 256,
                     tail_check_at: float = 1.0e3, tail_tol: float = 1.0e-6) -> list[str]:
    """Collect violated invariants as diagnostics; empty list means valid."""
    diagnostics: list[str] = []
    init, flux = problem.init, problem.flux

    nu_m, nu_p = problem.nu_minus0, problem.nu_plus0
    if not nu_m > nu_p:
        diagnostics.append("shock orientation violated: requires tail_coeff(minus,0) > tail_coeff(plus,0)")

    if not (problem.epsilon > 0 and problem.rho > 0):
        diagnostics.append("parameters out of range: epsilon and rho must be positive")
    elif not 0 < problem.mu() < 1:
        diagnostics.append(f"mu out of range: mu = rho/epsilon = {problem.mu():g} not in (0, 1)")

    lo, hi = min(nu_m, nu_p) - 1.0, max(nu_m, nu_p) + 1.0
    samples = np.linspace(lo, hi, n_convexity_samples)
    second = np.asarray(flux.derivative(2, samples), dtype=float)
    if not np.all(second > 0):
        diagnostics.append(
            f"convexity violated: second derivative <= 0 at u = {samples[second <= 0][0]:g}"
        )

    probe = np.linspace(-50.0, 50.0, 201)
    values = np.asarray(init.eval(probe), dtype=float)
    if not np.all(np.isfinite(values)):
        diagnostics.append("initial data produced non-finite values")
    elif np.max(np.abs(values)) > init.bound + 1e-12:
        diagnostics.append(
            f"boundedness violated: |nu| reaches {np.max(np.abs(values)):g} > bound {init.bound:g}"
        )

    for side, sgn in (("minus", -1.0), ("plus", 1.0)):
        sigma = sgn * tail_check_at
        err = abs(float(init.eval(sigma)) - _tail_partial_sum(init, side, sigma))
        if err > tail_tol:
            diagnostics.append(
                f"tail expansion mismatch on {side} side at sigma = {sigma:g}: error {err:.3g}"
            )
    return diagnostics
