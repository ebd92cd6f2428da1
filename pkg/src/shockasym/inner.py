"""Heat-dominated inner region: expansion coefficients h_n(sigma, omega).

In the stretched variables sigma = x/rho, omega = epsilon t / rho^2 the
solution expands in powers of mu = rho/epsilon.  The leading coefficient h_0
is the plain heat evolution of the initial profile; every higher coefficient
solves a forced heat equation with zero initial data,

    d h_n / d omega - d^2 h_n / d sigma^2 = - d E_n / d sigma,

where E_1 = phi(h_0) and E_n for n >= 2 collects flux derivatives of h_0
against products of lower coefficients.  Two independent routes are provided:
an implicit grid march and a pointwise heat-kernel (Duhamel) quadrature, which
cross-validate each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline, RectBivariateSpline
from scipy.linalg import solve_banded
from scipy.special import erfc, roots_legendre

from .errors import CoverageError, DomainError, InstabilityError, UsageError
from .grids import GridField
from .model import FluxModel, ProblemInstance, TailInitialData

__all__ = [
    "InnerGridSpec",
    "SelfSimilarProfile",
    "r000_eval",
    "h0_eval",
    "h0_sample",
    "en_assemble",
    "en_field",
    "hn_solve_grid",
    "solve_inner_fields",
    "hn_duhamel_point",
    "selfsimilar_extract",
]

_KERNEL_HALF_WIDTH = 12.0  # kernel support radius in units of sqrt(omega)


def r000_eval(nu_minus: float, nu_plus: float, z):
    """Smoothed-step profile nu_minus * erfc(z)/2 + nu_plus * erfc(-z)/2.

    The half-normalized complementary error function (value 1/2 at z = 0,
    limits 1 and 0) is the heat evolution of a unit step in the self-similar
    variable z = sigma / (2 sqrt(omega)).
    """
    z = np.asarray(z, dtype=float)
    return (nu_minus * 0.5 * erfc(z) + nu_plus * 0.5 * erfc(-z))[()]


def h0_eval(init: TailInitialData, sigma: float, omega: float) -> float:
    """Heat evolution of the initial profile by adaptive Gaussian quadrature.

    The window |s - sigma| <= 12 sqrt(omega) is integrated adaptively (split
    at declared breakpoints of nu); the remaining kernel mass is assigned the
    far-field states, keeping the absolute error below 1e-10 times the bound.
    """
    if omega <= 0:
        raise DomainError("omega must be positive")
    root = math.sqrt(omega)
    width = _KERNEL_HALF_WIDTH * root
    lo, hi = sigma - width, sigma + width
    norm = 1.0 / (2.0 * math.sqrt(math.pi * omega))

    def integrand(s):
        return float(init.eval(s)) * math.exp(-((sigma - s) ** 2) / (4.0 * omega)) * norm

    hints = sorted({float(p) for p in (list(init.breakpoints) + [0.0]) if lo < p < hi})
    value, _ = quad(integrand, lo, hi, points=hints or None,
                    epsabs=1e-11 * max(1.0, init.bound), epsrel=1e-12, limit=300)
    # tail mass of the kernel beyond the window, assigned to the limit states
    tail = 0.5 * erfc(_KERNEL_HALF_WIDTH / 2.0)
    value += tail * (float(init.tail_coeff("minus", 0)) + float(init.tail_coeff("plus", 0)))
    return value


@lru_cache(maxsize=32)
def _panel_rule(n_panels: int, order: int, half_width: float):
    nodes, weights = roots_legendre(order)
    edges = np.linspace(-half_width, half_width, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    y = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return y, w

def h0_sample(init: TailInitialData, sigma, omega: float) -> np.ndarray:
    """Heat evolution sampled on a batch of positions (vectorized).

    Uses the closed form when the profile carries one; otherwise a composite
    Gauss-Legendre rule in the kernel variable, with panels sized to resolve
    both the kernel and the profile's own features.
    """
    if omega <= 0:
        raise DomainError("omega must be positive")
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if init.h0_closed_fn is not None:
        return np.asarray(init.h0_closed_fn(sigma, omega), dtype=float)
    root = math.sqrt(omega)
    half_width = 8.0
    panel = min(0.5, 0.25 / root)
    n_panels = int(math.ceil(2 * half_width / panel))
    y, w = _panel_rule(n_panels, 12, half_width)
    s = sigma[:, None] - 2.0 * root * y[None, :]
    vals = np.asarray(init.eval(s), dtype=float)
    kernel = np.exp(-y * y) / math.sqrt(math.pi)
    return vals @ (w * kernel)


def _en_values(flux: FluxModel, h_values: list[np.ndarray], n: int) -> np.ndarray:
    """E_n from sampled h_0 .. h_{n-1}; E_1 is just phi(h_0)."""
    h0 = h_values[0]
    if n == 1:
        return np.asarray(flux.eval(h0), dtype=float)
    total = np.zeros_like(h0)
    for q in range(1, n):
        coeff = np.asarray(flux.derivative(q, h0), dtype=float) / math.factorial(q)
        comp_sum = np.zeros_like(h0)
        for parts in _compositions(n - 1, q):
            prod = np.ones_like(h0)
            for p in parts:
                prod = prod * h_values[p]
            comp_sum += prod
        total += coeff * comp_sum
    return total


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def en_assemble(h_fields: list[GridField], flux: FluxModel, n: int) -> GridField:
    """Pointwise assembly of E_n from gridded h_0 .. h_{n-1} on identical grids."""
    if n < 2:
        raise UsageError("en_assemble needs n >= 2; the n = 1 forcing is phi(h_0)")
    if len(h_fields) < n:
        raise UsageError(f"need h_0 .. h_{n - 1}, got {len(h_fields)} fields")
    base = h_fields[0]
    for f in h_fields[1:n]:
        if not (np.array_equal(f.x_axis, base.x_axis) and np.array_equal(f.t_axis, base.t_axis)):
            raise UsageError("h fields must share identical grids")
    values = np.empty_like(base.values)
    for i in range(base.t_axis.size):
        level = [f.values[i] for f in h_fields[:n]]
        values[i] = _en_values(flux, level, n)
    return GridField(x_axis=base.x_axis, t_axis=base.t_axis, values=values,
                     label=f"E{n}", axis_names=base.axis_names)


@dataclass(frozen=True)
class InnerGridSpec:
    """Discretization of the inner-region grid march.

    The sigma half-width defaults to max(40, 10 sqrt(omega_max)); time levels
    are geometric.  'backward_euler' is the default implicit scheme; the
    trapezoidal variant sits behind this flag.
    """

    omega_max: float
    sigma_half_width: float | None = None
    n_sigma: int = 4001
    omega_start: float = 1.0e-6
    steps_per_decade: int = 128
    output_levels: tuple | None = None
    scheme: str = "backward_euler"

    def resolved_half_width(self) -> float:
        if self.sigma_half_width is not None:
            return self.sigma_half_width
        return max(40.0, 10.0 * math.sqrt(self.omega_max))

    def resolved_outputs(self) -> np.ndarray:
        if self.output_levels is not None:
            out = np.asarray(sorted(self.output_levels), dtype=float)
            if out[0] <= 0 or out[-1] > self.omega_max * (1 + 1e-12):
                raise UsageError("output levels must lie in (0, omega_max]")
            return out
        lo = min(1.0e-2, self.omega_max / 10.0)
        n = max(2, int(math.ceil(8 * math.log10(self.omega_max / lo))) + 1)
        return np.geomspace(lo, self.omega_max, n)

    def schedule(self) -> np.ndarray:
        """Strictly increasing substep times from 0, hitting every output level."""
        ratio = 10.0 ** (1.0 / self.steps_per_decade)
        times = [self.omega_start]
        while times[-1] < self.omega_max:
            times.append(min(times[-1] * ratio, self.omega_max))
        merged = np.unique(np.concatenate((
            [0.0], times, self.resolved_outputs()
        )))
        return merged[merged <= self.omega_max * (1 + 1e-15)]


def _mirror_laplacian(values: np.ndarray) -> np.ndarray:
    """Second difference (units of values) with zero-derivative mirror ends."""
    lap = np.empty_like(values)
    lap[1:-1] = values[2:] - 2.0 * values[1:-1] + values[:-2]
    lap[0] = 2.0 * (values[1] - values[0])
    lap[-1] = 2.0 * (values[-2] - values[-1])
    return lap


def _heat_solve(rhs: np.ndarray, weighted_lam: float) -> np.ndarray:
    """Solve (I - weighted_lam * D2) out = rhs with mirror (zero-flux) ends."""
    n = rhs.size
    ab = np.zeros((3, n))
    ab[0, 1:] = -weighted_lam
    ab[1, :] = 1.0 + 2.0 * weighted_lam
    ab[2, :-1] = -weighted_lam
    ab[0, 1] = -2.0 * weighted_lam
    ab[2, -2] = -2.0 * weighted_lam
    return solve_banded((1, 1), ab, rhs)


def _sigma_derivative(values: np.ndarray, dx: float) -> np.ndarray:
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * dx)
    out[0] = (values[1] - values[0]) / dx
    out[-1] = (values[-2] - values[-1]) / -dx
    return out


def solve_inner_fields(problem: ProblemInstance, n_max: int,
                       spec: InnerGridSpec) -> list[GridField]:
    """March h_0 .. h_{n_max} together; returns one field per coefficient.

    h_0 uses the closed-form heat evolution when the profile has one and the
    implicit march otherwise; each h_n is stepped implicitly with the forcing
    -dE_n/dsigma evaluated from the coefficients already updated this step.
    """
    if n_max < 0:
        raise UsageError("n_max must be >= 0")
    if spec.scheme not in ("backward_euler", "trapezoid"):
        raise UsageError(f"unknown scheme {spec.scheme!r}")
    init, flux = problem.init, problem.flux
    half = spec.resolved_half_width()
    sigma = np.linspace(-half, half, spec.n_sigma)
    dx = sigma[1] - sigma[0]
    times = spec.schedule()
    outputs = spec.resolved_outputs()
    out_set = {float(t) for t in outputs}

    closed_h0 = init.h0_closed_fn
    h = [np.asarray(init.eval(sigma), dtype=float).copy()]
    h.extend(np.zeros_like(sigma) for _ in range(n_max))
    forcing_old = [None] * (n_max + 1)
    if spec.scheme == "trapezoid":
        for j in range(1, n_max + 1):
            e_vals = _en_values(flux, h[:j], j)
            forcing_old[j] = -_sigma_derivative(e_vals, dx)

    snapshots: dict[int, list[np.ndarray]] = {j: [] for j in range(n_max + 1)}
    recorded: list[float] = []

    def record(t):
        recorded.append(t)
        for j in range(n_max + 1):
            snapshots[j].append(h[j].copy())

    for i in range(1, times.size):
        dt = times[i] - times[i - 1]
        lam = dt / dx ** 2
        if closed_h0 is not None:
            h[0] = np.asarray(closed_h0(sigma, times[i]), dtype=float)
        elif spec.scheme == "backward_euler":
            h[0] = _heat_solve(h[0], lam)
        else:
            h[0] = _heat_solve(h[0] + 0.5 * lam * _mirror_laplacian(h[0]), 0.5 * lam)
        for j in range(1, n_max + 1):
            e_vals = _en_values(flux, h[:j], j)
            forcing = -_sigma_derivative(e_vals, dx)
            if spec.scheme == "backward_euler":
                h[j] = _heat_solve(h[j] + dt * forcing, lam)
            else:
                rhs = (h[j] + 0.5 * lam * _mirror_laplacian(h[j])
                       + 0.5 * dt * (forcing + forcing_old[j]))
                h[j] = _heat_solve(rhs, 0.5 * lam)
                forcing_old[j] = forcing
        if not all(np.all(np.isfinite(arr)) for arr in h):
            raise InstabilityError(f"non-finite inner coefficients at omega = {times[i]:g}")
        if float(times[i]) in out_set:
            record(float(times[i]))

    fields = []
    for j in range(n_max + 1):
        fields.append(GridField(
            x_axis=sigma, t_axis=np.array(recorded), values=np.array(snapshots[j]),
            label=f"h{j}",
        ))
    return fields


def hn_solve_grid(problem: ProblemInstance, n: int, spec: InnerGridSpec) -> GridField:
    """Grid march for a single coefficient h_n (n >= 1)."""
    if n < 1:
        raise UsageError("hn_solve_grid computes forced coefficients; use h0_sample for h_0")
    return solve_inner_fields(problem, n, spec)[n]


def en_field(problem: ProblemInstance, n: int, spec: InnerGridSpec) -> GridField:
    """Forcing base E_n sampled on the march grid, padded with its omega = 0 level.

    Runs the grid march for h_0 .. h_{n-1} at the spec's output levels and
    assembles E_n per level; the omega = 0 row comes from the initial data
    (h_0 = nu, higher coefficients zero).  This is the standard input for the
    Duhamel quadrature, so the spec's output levels should be chosen dense.
    """
    fields = solve_inner_fields(problem, n - 1, spec)
    sigma = fields[0].x_axis
    levels = np.concatenate(([0.0], fields[0].t_axis))
    rows = [
        _en_values(problem.flux,
                   [np.asarray(problem.init.eval(sigma), dtype=float)]
                   + [np.zeros_like(sigma)] * (n - 1), n)
    ]
    for i in range(fields[0].t_axis.size):
        rows.append(_en_values(problem.flux, [f.values[i] for f in fields], n))
    return GridField(x_axis=sigma, t_axis=levels, values=np.array(rows),
                     label=f"E{n}")


def hn_duhamel_point(problem: ProblemInstance, n: int, sigma: float, omega: float,
                     e_field: GridField, abs_tol: float = 1.0e-8) -> float:
    """Heat-kernel representation of h_n at one point, from a gridded E_n.

    The sigma-derivative of the forcing is moved onto the Gaussian kernel, so
    only E_n itself is interpolated (never differenced).  Serves as the
    independent oracle for the grid march.
    """
    if omega <= 0:
        raise DomainError("omega must be positive")
    need = _KERNEL_HALF_WIDTH * math.sqrt(omega)
    if sigma - need < e_field.x_axis[0] or sigma + need > e_field.x_axis[-1]:
        raise CoverageError(
            f"E grid covers [{e_field.x_axis[0]:g}, {e_field.x_axis[-1]:g}] but the kernel "
            f"needs [{sigma - need:g}, {sigma + need:g}]"
        )
    if e_field.t_axis[0] > 1e-12 or e_field.t_axis[-1] < omega * (1 - 1e-12):
        raise CoverageError(
            f"E grid levels cover [{e_field.t_axis[0]:g}, {e_field.t_axis[-1]:g}] "
            f"but the time integral needs [0, {omega:g}]"
        )
    spline = RectBivariateSpline(e_field.t_axis, e_field.x_axis, e_field.values, kx=3, ky=3)

    breakpoints = [float(b) for b in problem.init.breakpoints]

    def inner(v: float) -> float:
        tau = omega - v
        if tau <= 0:
            return -float(spline.ev(omega, sigma, dy=1))
        scale = 2.0 * math.sqrt(tau)
        edges = {-6.0, 6.0}
        for b in breakpoints:
            u_b = (sigma - b) / scale
            if -6.0 < u_b < 6.0:
                edges.add(u_b)
        y, w = _panel_rule(24, 10, 6.0)
        if len(edges) > 2:
            # split panels at mapped kink locations of the forcing
            pieces = sorted(edges)
            ys, ws = [], []
            nodes, weights = roots_legendre(10)
            for a, b in zip(pieces[:-1], pieces[1:]):
                seg = np.linspace(a, b, max(2, int(math.ceil((b - a) / 0.5)) + 1))
                mid = 0.5 * (seg[:-1] + seg[1:])
                hw = 0.5 * np.diff(seg)
                ys.append((mid[:, None] + hw[:, None] * nodes[None, :]).ravel())
                ws.append((hw[:, None] * weights[None, :]).ravel())
            y = np.concatenate(ys)
            w = np.concatenate(ws)
        s_pts = sigma - scale * y
        e_vals = spline.ev(np.full_like(s_pts, v), s_pts)
        kern = y * np.exp(-y * y)
        return float(np.dot(w, kern * e_vals)) / math.sqrt(math.pi * tau)

    value, _ = quad(inner, 0.0, omega, epsabs=abs_tol, epsrel=1e-9, limit=300)
    return value


@dataclass(frozen=True)
class SelfSimilarProfile:
    """Rescaled slice h_n(2 z sqrt(omega), omega) / omega^(n/2) on a z grid."""

    z_axis: np.ndarray
    values: np.ndarray
    n: int
    omega_used: float


def selfsimilar_extract(field: GridField, n: int, omega_level: float,
                        z_max: float = 4.0, n_z: int = 321) -> SelfSimilarProfile:
    """Extract the leading self-similar profile from a gridded coefficient."""
    idx = np.nonzero(np.isclose(field.t_axis, omega_level, rtol=1e-10, atol=0.0))[0]
    if idx.size == 0:
        raise UsageError(f"omega = {omega_level!r} is not among the field's levels")
    omega = float(field.t_axis[idx[0]])
    span = 2.0 * z_max * math.sqrt(omega)
    if span > field.x_axis[-1] + 1e-12 or -span < field.x_axis[0] - 1e-12:
        raise CoverageError(
            f"|z| <= {z_max:g} needs |sigma| <= {span:g}, field covers "
            f"[{field.x_axis[0]:g}, {field.x_axis[-1]:g}]"
        )
    z = np.linspace(-z_max, z_max, n_z)
    spline = CubicSpline(field.x_axis, field.values[idx[0]])
    values = spline(2.0 * z * math.sqrt(omega)) / omega ** (n / 2.0)
    return SelfSimilarProfile(z_axis=z, values=values, n=n, omega_used=omega)
