"""Reference solutions of the full viscous problem on a truncated domain.

Two independent routes: a conservative finite-difference march for any convex
flux (MUSCL-reconstructed Godunov flux, trapezoidal implicit viscosity), and a
heat-substitution quadrature formula that is exact for the quadratic flux.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .errors import DomainError, InstabilityError, UsageError
from .grids import GridField
from .model import ProblemInstance, TailInitialData

__all__ = ["SolveConfig", "fd_solve", "burgers_exact", "burgers_exact_profile", "sup_error"]


@dataclass(frozen=True)
class SolveConfig:
    """Discretization of the full-problem reference solve."""

    x_min: float
    x_max: float
    n_x: int
    t_end: float
    scheme: str = "godunov"
    cfl: float = 0.8
    output_times: tuple | None = None
    boundary: str = "dirichlet"

    def __post_init__(self):
        if not (self.x_min < 0.0 < self.x_max):
            raise UsageError("domain must contain x = 0 strictly inside")
        if self.n_x < 16:
            raise UsageError("need at least 16 spatial nodes")
        if self.t_end <= 0:
            raise UsageError("t_end must be positive")
        if not 0 < self.cfl <= 1:
            raise UsageError("CFL safety factor must lie in (0, 1]")
        if self.scheme not in ("godunov", "laxf"):
            raise UsageError(f"unknown scheme {self.scheme!r}")

    def resolved_outputs(self) -> tuple:
        if self.output_times is None:
            return (self.t_end,)
        out = tuple(sorted(self.output_times))
        if any(t <= 0 or t > self.t_end + 1e-12 for t in out):
            raise UsageError("output times must lie in (0, t_end]")
        return out


def _mc_slopes(u: np.ndarray) -> np.ndarray:
    """Monotonized-central limited slopes; u includes one ghost node per end."""
    dm = u[1:-1] - u[:-2]
    dp = u[2:] - u[1:-1]
    central = 0.5 * (dm + dp)
    slope = np.sign(central) * np.minimum(
        np.abs(central), np.minimum(2.0 * np.abs(dm), 2.0 * np.abs(dp))
    )
    return np.where(dm * dp > 0, slope, 0.0)


def _godunov_flux(flux_eval, left: np.ndarray, right: np.ndarray, sonic: float | None) -> np.ndarray:
    lo = np.minimum(left, right)
    hi = np.maximum(left, right)
    if sonic is None:
        interior_min = np.minimum(flux_eval(lo), flux_eval(hi))
    else:
        interior_min = flux_eval(np.clip(sonic, lo, hi))
    return np.where(left <= right, interior_min, np.maximum(flux_eval(left), flux_eval(right)))


def fd_solve(problem: ProblemInstance, cfg: SolveConfig) -> GridField:
    """Conservative finite-difference solve; snapshots at the requested times.

    Scheme 'godunov': second order (limited reconstruction, Heun convection,
    trapezoidal implicit viscosity via splitting); time step bounded by the
    convective CFL condition only.  Scheme 'laxf': first-order Lax-Friedrichs
    flux with explicit viscosity, time step additionally bounded by
    dx^2 / (2 epsilon).
    """
    flux, init = problem.flux, problem.init
    eps, rho = problem.epsilon, problem.rho
    x = np.linspace(cfg.x_min, cfg.x_max, cfg.n_x)
    dx = x[1] - x[0]
    if dx > eps / 4.0 + 1e-15:
        warnings.warn(
            f"dx = {dx:g} does not resolve the viscous layer (epsilon/4 = {eps / 4:g})",
            RuntimeWarning,
        )
    u = np.asarray(init.eval(x / rho), dtype=float).copy()
    bc_left = float(init.tail_coeff("minus", 0))
    bc_right = float(init.tail_coeff("plus", 0))
    u[0], u[-1] = bc_left, bc_right

    umin = min(u.min(), bc_left, bc_right) - 1.0
    umax = max(u.max(), bc_left, bc_right) + 1.0
    span = np.linspace(umin, umax, 257)
    speeds = np.asarray(flux.derivative(1, span), dtype=float)
    max_speed = float(np.max(np.abs(speeds)))
    sonic = None
    if speeds[0] < 0 < speeds[-1]:
        sonic = brentq(lambda v: float(flux.derivative(1, v)), umin, umax)

    dt_conv = cfg.cfl * dx / max_speed if max_speed > 0 else np.inf
    if cfg.scheme == "laxf":
        dt_target = min(dt_conv, cfg.cfl * dx * dx / (2.0 * eps))
    else:
        dt_target = dt_conv
    if not np.isfinite(dt_target):
        dt_target = cfg.t_end

    def flux_eval(v):
        return np.asarray(flux.eval(v), dtype=float)

    def convection_rhs(v: np.ndarray, dt: float) -> np.ndarray:
        ext = np.concatenate(([bc_left, bc_left], v[1:-1], [bc_right, bc_right]))
        if cfg.scheme == "godunov":
            slopes = _mc_slopes(ext)
            left_states = ext[1:-2] + 0.5 * slopes[:-1]
            right_states = ext[2:-1] - 0.5 * slopes[1:]
            interface = _godunov_flux(flux_eval, left_states, right_states, sonic)
        else:
            a, b = ext[1:-2], ext[2:-1]
            interface = 0.5 * (flux_eval(a) + flux_eval(b)) - 0.5 * (dx / dt) * (b - a)
        out = np.zeros_like(v)
        out[1:-1] = -(interface[1:] - interface[:-1]) / dx
        return out

    def diffusion_step(v: np.ndarray, tau: float, implicit_weight: float) -> np.ndarray:
        lam = eps * tau / dx ** 2
        n = v.size
        rhs = v.copy()
        if implicit_weight < 1.0:
            w = 1.0 - implicit_weight
            rhs[1:-1] = v[1:-1] + w * lam * (v[2:] - 2.0 * v[1:-1] + v[:-2])
        ab = np.zeros((3, n - 2))
        ab[0, 1:] = -implicit_weight * lam
        ab[1, :] = 1.0 + 2.0 * implicit_weight * lam
        ab[2, :-1] = -implicit_weight * lam
        inner = rhs[1:-1].copy()
        inner[0] += implicit_weight * lam * v[0]
        inner[-1] += implicit_weight * lam * v[-1]
        out = v.copy()
        out[1:-1] = solve_banded((1, 1), ab, inner)
        return out

    outputs = cfg.resolved_outputs()
    snapshots = []
    t_now = 0.0
    for t_target in outputs:
        n_steps = max(1, int(math.ceil((t_target - t_now) / dt_target - 1e-12)))
        dt = (t_target - t_now) / n_steps
        for _ in range(n_steps):
            if cfg.scheme == "godunov":
                u = diffusion_step(u, 0.5 * dt, 0.5)
                pred = u + dt * convection_rhs(u, dt)
                u = u + 0.5 * dt * (convection_rhs(u, dt) + convection_rhs(pred, dt))
                u = diffusion_step(u, 0.5 * dt, 0.5)
            else:
                lam = eps * dt / dx ** 2
                visc = np.zeros_like(u)
                visc[1:-1] = lam * (u[2:] - 2.0 * u[1:-1] + u[:-2])
                u = u + dt * convection_rhs(u, dt) + visc
            u[0], u[-1] = bc_left, bc_right
            if not np.all(np.isfinite(u)):
                raise InstabilityError(
                    f"non-finite values at t = {t_now:g}; violated step bound dt <= {dt_target:g}"
                )
        t_now = t_target
        snapshots.append(u.copy())
    return GridField(x_axis=x, t_axis=np.array(outputs), values=np.array(snapshots),
                     label="u", axis_names=("x", "t"))


def _stationary_points(init: TailInitialData, x: float, t: float, rho: float,
                       lo: float, hi: float) -> list[float]:
    """Roots of G'(s) = (s - x)/t + nu(s/rho) inside [lo, hi]."""
    s = np.linspace(lo, hi, 257)
    g = (s - x) / t + np.asarray(init.eval(s / rho), dtype=float)
    roots = []
    sign_change = np.nonzero(np.signbit(g[:-1]) != np.signbit(g[1:]))[0]
    for i in sign_change:
        roots.append(brentq(
            lambda v: (v - x) / t + float(init.eval(v / rho)), s[i], s[i + 1], xtol=1e-12
        ))
    return roots


def burgers_exact(init: TailInitialData, x: float, t: float, epsilon: float,
                  rho: float = 1.0) -> float:
    """Quadrature formula for the quadratic flux, stable via peak subtraction.

    The weight is exp(-G(s) / (2 epsilon)) with
    G(s) = (x-s)^2/(2t) + integral_0^s nu(r/rho) dr; the returned value is the
    weighted average of (x-s)/t.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    bound = init.bound
    pad = 14.0 * math.sqrt(epsilon * t) + 2.0 * rho
    lo = x - t * bound - pad
    hi = x + t * bound + pad

    def big_g(s):
        return (x - s) ** 2 / (2.0 * t) + rho * float(init.primitive(s / rho))

    special = _stationary_points(init, x, t, rho, lo, hi)
    for b in init.breakpoints:
        sb = b * rho
        if lo < sb < hi:
            special.append(sb)
    special = sorted(special)
    candidates = np.concatenate((np.linspace(lo, hi, 129), np.array(special or [x])))
    g_min = min(big_g(s) for s in candidates)

    def weight(s):
        return math.exp(-(big_g(s) - g_min) / (2.0 * epsilon))

    den, _ = quad(weight, lo, hi, points=special or None, epsabs=1e-13, epsrel=1e-11, limit=300)
    num, _ = quad(lambda s: (x - s) / t * weight(s), lo, hi, points=special or None,
                  epsabs=1e-13, epsrel=1e-11, limit=300)
    return num / den


def burgers_exact_profile(init: TailInitialData, xs, t: float, epsilon: float,
                          rho: float = 1.0) -> np.ndarray:
    """Pointwise quadrature formula mapped over a batch of positions."""
    return np.array([burgers_exact(init, float(x), t, epsilon, rho) for x in np.atleast_1d(xs)])


def sup_error(a: GridField, b, window: tuple[float, float] | None = None,
              margin: float = 0.0) -> float:
    """max |a - b| over a's nodes inside the window.

    ``b`` is a GridField on identical axes, or a callable b(x_nodes, t_level).
    The window defaults to a's spatial extent shrunk by ``margin`` on each side.
    """
    if window is None:
        window = (a.x_axis[0] + margin, a.x_axis[-1] - margin)
    mask = (a.x_axis >= window[0]) & (a.x_axis <= window[1])
    if not np.any(mask):
        raise UsageError(f"window {window} contains no grid nodes")
    worst = 0.0
    for i, t in enumerate(a.t_axis):
        if isinstance(b, GridField):
            if b.values.shape != a.values.shape or not np.allclose(b.x_axis, a.x_axis):
                raise UsageError("fields must share axes for direct comparison")
            other = b.values[i][mask]
        else:
            other = np.asarray(b(a.x_axis[mask], float(t)), dtype=float)
        worst = max(worst, float(np.max(np.abs(a.values[i][mask] - other))))
    return worst
