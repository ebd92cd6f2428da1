"""Unit-viscosity layer smoothing the jump of the limit solution.

The layer profile solves  Gamma_theta + phi(Gamma)_eta = Gamma_etaeta  with
step initial data.  The grid solver works in the frame zeta = eta - c theta
moving with the jump-condition speed c, where the layer stays centered and the
far fields are the two states; the flux in that frame is psi(g) = phi(g) - c g,
whose values at the two states coincide (the jump condition), so the discrete
conservative form carries zero net boundary flux.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import RectBivariateSpline
from scipy.linalg import solve_banded
from scipy.special import log_ndtr

from .errors import DomainError, InstabilityError, ShockAsymError, UsageError
from .grids import GridField
from .model import FluxModel, shock_speed

__all__ = [
    "GammaGridSpec",
    "ShockLayerField",
    "gamma_solve",
    "traveling_wave",
    "burgers_gamma_exact",
]


@dataclass(frozen=True)
class GammaGridSpec:
    """Discretization of the co-moving layer solve.

    ``half_width`` defaults to max(50, 10 sqrt(theta_max)).  ``scheme``
    'central' is second order (centered flux, trapezoidal diffusion, explicit
    Heun convection via Strang splitting); 'godunov' is the monotone
    first-order fallback.
    """

    half_width: float | None = None
    dzeta: float = 0.02
    dtheta: float = 0.02
    n_outputs: int = 21
    scheme: str = "central"
    boundary: str = "dirichlet"
    startup_cells: float = 36.0   # monotone sub-stepped phase until width ~ 6 cells

    def resolved_half_width(self, theta_max: float) -> float:
        if self.half_width is not None:
            return self.half_width
        return max(50.0, 10.0 * math.sqrt(theta_max))


@dataclass(frozen=True)
class ShockLayerField:
    """Layer samples in the co-moving frame, with states and speed attached."""

    field: GridField
    nu_minus: float
    nu_plus: float
    c: float

    def __post_init__(self):
        tol = 1e-8 * max(1.0, abs(self.nu_minus - self.nu_plus))
        v = self.field.values
        if v.min() < self.nu_plus - tol or v.max() > self.nu_minus + tol:
            raise InstabilityError("layer values escape the interval between the states")
        if np.any(np.diff(v, axis=1) > tol):
            raise InstabilityError("layer profile lost monotonicity in zeta")

    @property
    def zeta_axis(self) -> np.ndarray:
        return self.field.x_axis

    @property
    def theta_axis(self) -> np.ndarray:
        return self.field.t_axis

    def interpolate(self, zeta, theta):
        """Bilinear interpolation inside the covered rectangle."""
        zeta = np.asarray(zeta, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if (np.any(zeta < self.zeta_axis[0]) or np.any(zeta > self.zeta_axis[-1])
                or np.any(theta < self.theta_axis[0]) or np.any(theta > self.theta_axis[-1])):
            raise DomainError("interpolation point outside the solved layer rectangle")
        spline = RectBivariateSpline(self.theta_axis, self.zeta_axis, self.field.values, kx=1, ky=1)
        return spline.ev(theta, zeta)[()]


def _diffusion_step(values: np.ndarray, lam: float, implicit_weight: float) -> np.ndarray:
    """One implicit step of v_t = v_zz with Dirichlet ends.

    lam = dt / dz^2; implicit_weight 1.0 is backward Euler, 0.5 trapezoidal.
    """
    n = values.size
    rhs = values.copy()
    if implicit_weight < 1.0:
        w = 1.0 - implicit_weight
        rhs[1:-1] = values[1:-1] + w * lam * (values[2:] - 2.0 * values[1:-1] + values[:-2])
    ab = np.zeros((3, n - 2))
    ab[0, 1:] = -implicit_weight * lam
    ab[1, :] = 1.0 + 2.0 * implicit_weight * lam
    ab[2, :-1] = -implicit_weight * lam
    inner_rhs = rhs[1:-1].copy()
    inner_rhs[0] += implicit_weight * lam * values[0]
    inner_rhs[-1] += implicit_weight * lam * values[-1]
    out = values.copy()
    out[1:-1] = solve_banded((1, 1), ab, inner_rhs)
    return out


def _godunov_flux(psi, left: np.ndarray, right: np.ndarray, sonic: float | None) -> np.ndarray:
    """Exact-Riemann flux for a convex flux psi with optional interior minimum."""
    lo = np.minimum(left, right)
    hi = np.maximum(left, right)
    if sonic is None:
        interior_min = np.minimum(psi(lo), psi(hi))
    else:
        s = np.clip(sonic, lo, hi)
        interior_min = psi(s)
    return np.where(left <= right, interior_min, np.maximum(psi(left), psi(right)))


def gamma_solve(flux: FluxModel, nu_minus: float, nu_plus: float, theta_max: float,
                spec: GammaGridSpec | None = None) -> ShockLayerField:
    """March the layer problem in the co-moving frame from step initial data.

    The initial step is regularized over one cell (midpoint value at zeta = 0).
    Raises a domain-too-small error if the layer reaches the truncated ends.
    """
    if not nu_minus > nu_plus:
        raise DomainError("shock configuration requires nu_minus > nu_plus")
    if theta_max <= 0:
        raise DomainError("theta_max must be positive")
    spec = spec or GammaGridSpec()
    if spec.scheme not in ("central", "godunov"):
        raise UsageError(f"unknown scheme {spec.scheme!r}")
    c = shock_speed(flux, nu_minus, nu_plus)

    half = spec.resolved_half_width(theta_max)
    n = 2 * int(round(half / spec.dzeta)) + 1
    zeta = np.linspace(-half, half, n)
    dz = zeta[1] - zeta[0]

    def psi(u):
        return flux.eval(u) - c * u

    # sonic point of psi (phi'(u) = c); exists inside (nu_plus, nu_minus) by convexity
    from scipy.optimize import brentq
    sonic = brentq(lambda u: float(flux.derivative(1, u)) - c, nu_plus, nu_minus)

    g = np.where(zeta < 0, nu_minus, nu_plus).astype(float)
    g[np.isclose(zeta, 0.0)] = 0.5 * (nu_minus + nu_plus)

    speed_bound = max(abs(float(flux.derivative(1, nu_minus)) - c),
                      abs(float(flux.derivative(1, nu_plus)) - c))
    dt_cfl = dz / speed_bound if speed_bound > 0 else np.inf
    dt_main = min(spec.dtheta, 0.9 * dt_cfl)

    # step schedule: sub-stepped ramp through the under-resolved early layer
    # (width below startup_cells^(1/2) cells), then uniform main steps
    theta_startup = min(spec.startup_cells * dz * dz, 0.5 * theta_max)
    times = [0.0]
    step_dt = 0.25 * dz * dz
    while times[-1] < theta_startup:
        times.append(min(times[-1] + step_dt, theta_startup))
        step_dt *= 1.3
    n_main = max(1, int(math.ceil((theta_max - times[-1]) / dt_main)))
    times.extend(np.linspace(times[-1], theta_max, n_main + 1)[1:])
    times = np.array(times)

    outputs = np.linspace(0.0, theta_max, spec.n_outputs)
    out_idx = set(np.unique([int(np.argmin(np.abs(times - th))) for th in outputs]))
    out_thetas = [0.0]
    snapshots = [g.copy()]

    def convection(u: np.ndarray, godunov: bool) -> np.ndarray:
        if godunov:
            fl = _godunov_flux(psi, u[:-1], u[1:], sonic)
        else:
            fl = 0.5 * (psi(u[:-1]) + psi(u[1:]))
        du = np.zeros_like(u)
        du[1:-1] = -(fl[1:] - fl[:-1]) / dz
        return du

    for step in range(1, times.size):
        dt = times[step] - times[step - 1]
        lam = dt / dz ** 2
        startup = times[step] <= theta_startup + 1e-15
        godunov = spec.scheme == "godunov" or startup
        if godunov:
            g = g + dt * convection(g, godunov=True)
            g = _diffusion_step(g, lam, implicit_weight=1.0)
        else:
            g = _diffusion_step(g, 0.5 * lam, 0.5)
            pred = g + dt * convection(g, godunov=False)
            g = g + 0.5 * dt * (convection(g, godunov=False) + convection(pred, godunov=False))
            g = _diffusion_step(g, 0.5 * lam, 0.5)
        if not np.all(np.isfinite(g)):
            raise InstabilityError(
                f"non-finite values at theta = {times[step]:g}; time step {dt:g} too large for the forcing"
            )
        if step in out_idx and times[step] > out_thetas[-1]:
            out_thetas.append(times[step])
            snapshots.append(g.copy())

    tol = 1e-6 * max(1.0, nu_minus - nu_plus)
    if abs(snapshots[-1][1] - nu_minus) > tol or abs(snapshots[-1][-2] - nu_plus) > tol:
        raise DomainError(
            f"domain too small: layer reached the truncated ends at half width {half:g}"
        )

    field = GridField(
        x_axis=zeta, t_axis=np.array(out_thetas), values=np.array(snapshots),
        label="Gamma", axis_names=("zeta", "theta"),
    )
    return ShockLayerField(field=field, nu_minus=nu_minus, nu_plus=nu_plus, c=c)


def traveling_wave(flux: FluxModel, nu_minus: float, nu_plus: float, zeta) -> np.ndarray:
    """Steady profile g with g' = psi(g) - psi(nu_plus), normalized g(0) = midpoint.

    Integrated by an adaptive stepper in both directions from zero; for a
    convex flux the profile is strictly decreasing between the states.
    """
    if not nu_minus > nu_plus:
        raise DomainError("shock configuration requires nu_minus > nu_plus")
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    c = shock_speed(flux, nu_minus, nu_plus)
    offset = c * nu_plus - float(flux.eval(nu_plus))

    def rhs(_, y):
        return [float(flux.eval(y[0])) - c * y[0] + offset]

    g0 = 0.5 * (nu_minus + nu_plus)
    values = np.empty_like(zeta)
    center = np.isclose(zeta, 0.0)
    values[center] = g0
    for direction in (-1.0, 1.0):
        mask = (zeta * direction > 0) & ~center
        if not np.any(mask):
            continue
        idx = np.nonzero(mask)[0]
        idx = idx[np.argsort(direction * zeta[idx])]  # marching order away from 0
        targets = zeta[idx]
        sol = solve_ivp(rhs, (0.0, targets[-1]), [g0], t_eval=targets,
                        rtol=1e-12, atol=1e-14, method="DOP853")
        if not sol.success:
            raise ShockAsymError(f"profile integration failed: {sol.message}")
        values[idx] = sol.y[0]
    eps = 1e-9 * (nu_minus - nu_plus)
    if np.any(values > nu_minus + eps) or np.any(values < nu_plus - eps):
        raise ShockAsymError("internal consistency: profile left the interval between the states")
    order = np.argsort(zeta)
    if np.any(np.diff(values[order]) > eps):
        raise ShockAsymError("internal consistency: profile is not strictly decreasing")
    return values


def burgers_gamma_exact(nu_minus: float, nu_plus: float, eta, theta):
    """Closed-form layer for the quadratic flux, from the heat-equation substitution.

    Written with scaled complementary error functions through log-space so it
    is stable for arbitrarily large arguments; the result is an exact convex
    combination of the two states.
    """
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(theta_arr <= 0):
        raise DomainError("theta must be positive")
    eta_arr = np.asarray(eta, dtype=float)
    u_l, u_r = nu_minus, nu_plus
    sqrt_t = np.sqrt(theta_arr)
    x_l = (eta_arr - u_l * theta_arr) / (2.0 * sqrt_t)
    x_r = (u_r * theta_arr - eta_arr) / (2.0 * sqrt_t)
    log_wl = -0.5 * u_l * eta_arr + 0.25 * u_l ** 2 * theta_arr + log_ndtr(-math.sqrt(2.0) * x_l)
    log_wr = -0.5 * u_r * eta_arr + 0.25 * u_r ** 2 * theta_arr + log_ndtr(-math.sqrt(2.0) * x_r)
    m = np.maximum(log_wl, log_wr)
    wl = np.exp(log_wl - m)
    wr = np.exp(log_wr - m)
    return ((u_l * wl + u_r * wr) / (wl + wr))[()]
