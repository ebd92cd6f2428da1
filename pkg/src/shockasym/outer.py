"""Expansion of the solution away from the shock, in powers of rho and epsilon.

Each coefficient u_{m,n}(x, t) on a given side of the shock is a finite sum of
rational terms

    alpha * t^s / (x - c t)^k,      c = phi'(nu0) on that side,

closed under the operations the recurrence needs: x-derivatives, products, and
integration along characteristics.  The closure forces k = m + s with
n <= s <= m - 1, which the constructor asserts for every computed entry.

Coefficients default to double precision; with ``exact=True`` the whole
recurrence runs over ``fractions.Fraction`` (exact for rational states and
flux data), which the tests use to certify the floating path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from .errors import DomainError, PoleProximityError, SequencingError, UsageError
from .model import FluxModel, TailInitialData

__all__ = [
    "CharacteristicTerm",
    "CharacteristicSeries",
    "OuterTable",
    "series_derivative_x",
    "series_product",
    "forcing_term",
    "integrate_characteristic",
    "outer_coefficient",
    "outer_partial_sum",
    "transport_image",
    "format_series_report",
]

_SIDES = ("minus", "plus")


@dataclass(frozen=True)
class CharacteristicTerm:
    """One rational term alpha * t^s / (x - c t)^k."""

    alpha: object
    s: int
    k: int
    side: str

    def __post_init__(self):
        if self.side not in _SIDES:
            raise UsageError(f"side must be one of {_SIDES}, got {self.side!r}")
        if self.s < 0 or self.k < 1:
            raise UsageError(f"term exponents out of range: s={self.s}, k={self.k}")
        if isinstance(self.alpha, float) and not math.isfinite(self.alpha):
            raise UsageError("term coefficient must be finite")


class CharacteristicSeries:
    """Canonical finite sum of characteristic terms on one side.

    Canonical means one term per (s, k) pair, zero coefficients dropped and
    terms sorted, so equality of term tuples is equality of series.
    """

    __slots__ = ("side", "terms")

    def __init__(self, side: str, terms: Iterable[CharacteristicTerm] = ()):
        if side not in _SIDES:
            raise UsageError(f"side must be one of {_SIDES}, got {side!r}")
        merged: dict[tuple[int, int], object] = {}
        for term in terms:
            if term.side != side:
                raise UsageError("all terms of a series must share its side")
            key = (term.s, term.k)
            merged[key] = merged.get(key, 0) + term.alpha
        canonical = tuple(
            CharacteristicTerm(alpha=a, s=s, k=k, side=side)
            for (s, k), a in sorted(merged.items())
            if a != 0
        )
        object.__setattr__(self, "side", side)
        object.__setattr__(self, "terms", canonical)

    def __setattr__(self, name, value):
        raise AttributeError("CharacteristicSeries is immutable")

    def __iter__(self) -> Iterator[CharacteristicTerm]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CharacteristicSeries):
            return NotImplemented
        return self.side == other.side and self.terms == other.terms

    def __hash__(self):
        return hash((self.side, self.terms))

    def __repr__(self) -> str:
        body = " + ".join(f"{t.alpha}*t^{t.s}/y^{t.k}" for t in self.terms) or "0"
        return f"CharacteristicSeries({self.side}: {body})"

    def scale(self, factor) -> "CharacteristicSeries":
        return CharacteristicSeries(
            self.side,
            (CharacteristicTerm(t.alpha * factor, t.s, t.k, self.side) for t in self.terms),
        )

    def __add__(self, other: "CharacteristicSeries") -> "CharacteristicSeries":
        if other.side != self.side:
            raise UsageError("cannot add series from different sides")
        return CharacteristicSeries(self.side, tuple(self.terms) + tuple(other.terms))

    def evaluate(self, x: float, t: float, c: float,
                 pole_rtol: float = 1.0e-6) -> float:
        """Sum alpha * t^s * (x - c t)^(-k) in double precision."""
        y = x - c * t
        if abs(y) < pole_rtol * max(1.0, abs(x), abs(t)):
            raise PoleProximityError(
                f"evaluation at x={x:g}, t={t:g} is within {pole_rtol:g} of the pole x = {c:g} t"
            )
        total = 0.0
        for term in self.terms:
            total += float(term.alpha) * t ** term.s * y ** (-term.k)
        return total


def series_derivative_x(series: CharacteristicSeries, order: int = 1) -> CharacteristicSeries:
    """Term-wise x-derivative: each derivative sends y^-k to -k y^-(k+1)."""
    if order not in (1, 2):
        raise UsageError("derivative order must be 1 or 2")
    terms = []
    for t in series:
        alpha, k = t.alpha, t.k
        for _ in range(order):
            alpha = alpha * (-k)
            k += 1
        terms.append(CharacteristicTerm(alpha, t.s, k, series.side))
    return CharacteristicSeries(series.side, terms)


def series_product(*factors: CharacteristicSeries) -> CharacteristicSeries:
    """Distributed product; exponents add, coefficients multiply."""
    if not factors:
        raise UsageError("series_product needs at least one factor")
    side = factors[0].side
    if any(f.side != side for f in factors):
        raise UsageError("cannot multiply series from different sides")
    result = factors[0]
    for factor in factors[1:]:
        terms = []
        for a in result:
            for b in factor:
                terms.append(CharacteristicTerm(a.alpha * b.alpha, a.s + b.s, a.k + b.k, side))
        result = CharacteristicSeries(side, terms)
    return result


def transport_image(series: CharacteristicSeries) -> CharacteristicSeries:
    """Image under d/dt + c d/dx; the c-dependent parts cancel term by term.

    (d/dt + c d/dx)[alpha t^s (x-ct)^-k] = alpha s t^(s-1) (x-ct)^-k, so a
    computed coefficient solves its transport equation exactly when this image
    equals its forcing as a canonical series.
    """
    terms = [
        CharacteristicTerm(t.alpha * t.s, t.s - 1, t.k, series.side)
        for t in series.terms
        if t.s > 0
    ]
    return CharacteristicSeries(series.side, terms)


def _compositions(total: int, parts: int, minimum: int) -> Iterator[tuple[int, ...]]:
    """Ordered tuples of the given length with entries >= minimum summing to total."""
    if parts == 1:
        if total >= minimum:
            yield (total,)
        return
    for first in range(minimum, total - minimum * (parts - 1) + 1):
        for rest in _compositions(total - first, parts - 1, minimum):
            yield (first,) + rest


class OuterTable:
    """Memoized table of expansion coefficients u_{m,n} for both sides.

    Construction is single-writer: populate entries (directly or through
    ``outer_coefficient``), after which lookups and evaluations are pure.
    """

    def __init__(self, flux: FluxModel, init: TailInitialData,
                 max_order: int = 12, exact: bool = False):
        self.flux = flux
        self.init = init
        self.max_order = max_order
        self.exact = exact
        self._entries: dict[tuple[int, int, str], CharacteristicSeries] = {}
        self._states = {
            "minus": self._coeff(init.tail_coeff("minus", 0)),
            "plus": self._coeff(init.tail_coeff("plus", 0)),
        }

    def _coeff(self, value):
        return Fraction(value) if self.exact else float(value)

    def state(self, side: str):
        return self._states[side]

    def flux_derivative(self, order: int, side: str):
        return self.flux.derivative(order, self._states[side])

    def characteristic_speed(self, side: str) -> float:
        return float(self.flux_derivative(1, side))

    def tail_coefficient(self, side: str, m: int):
        if m >= self.init.tail_order:
            return self._coeff(0)
        return self._coeff(self.init.tail_coeff(side, m))

    def __contains__(self, key) -> bool:
        return key in self._entries

    def entry(self, m: int, n: int, side: str) -> CharacteristicSeries:
        key = (m, n, side)
        if key not in self._entries:
            raise SequencingError(f"entry (m={m}, n={n}, side={side}) not populated yet")
        return self._entries[key]

    def _store(self, m: int, n: int, side: str, series: CharacteristicSeries) -> None:
        for term in series:
            if not (n <= term.s <= m - 1 and term.k == m + term.s):
                raise DomainError(
                    f"computed u_({m},{n}) leaves the closed family: term s={term.s}, k={term.k}"
                )
        self._entries[(m, n, side)] = series

    def populate(self, max_m: int) -> None:
        for m in range(1, max_m + 1):
            for n in range(0, m):
                for side in _SIDES:
                    outer_coefficient(self, m, n, side)


def forcing_term(table: OuterTable, m: int, n: int, side: str) -> CharacteristicSeries:
    """Right-hand side driving u_{m,n}: diffusion of u_{m-1,n-1} minus the
    nonlinear flux corrections built from ordered index compositions."""
    if not (m >= 1 and 0 <= n <= m - 1):
        raise UsageError(f"indices out of range: m={m}, n={n}")
    total = CharacteristicSeries(side)
    if n >= 1:
        total = total + series_derivative_x(table.entry(m - 1, n - 1, side), 2)
    for q in range(2, m - n + 1):
        phi_q = table.flux_derivative(q, side)
        if phi_q == 0:
            continue
        factor = -phi_q * (Fraction(1, math.factorial(q)) if table.exact
                           else 1.0 / math.factorial(q))
        group = CharacteristicSeries(side)
        for i_tuple in _compositions(m, q, 1):
            for j_tuple in _compositions(n, q, 0):
                # indices outside the defined range 0 <= j <= i-1 contribute zero
                if any(j > i - 1 for i, j in zip(i_tuple, j_tuple)):
                    continue
                product = series_product(*(table.entry(i, j, side)
                                           for i, j in zip(i_tuple, j_tuple)))
                group = group + product
        total = total + series_derivative_x(group, 1).scale(factor)
    return total


def integrate_characteristic(forcing: CharacteristicSeries, m: int, n: int,
                             initial_coeff) -> CharacteristicSeries:
    """Integrate the forcing along characteristics and add the initial-data term.

    Substituting the characteristic into (x - c t')^-k leaves (x - c t)^-k, so
    each forcing term alpha t^s y^-k integrates to alpha t^(s+1)/(s+1) y^-k.
    For n = 0 the initial data contributes nu_m * y^-m.
    """
    side = forcing.side
    terms = [
        CharacteristicTerm(t.alpha * (Fraction(1, t.s + 1) if isinstance(t.alpha, Fraction)
                                      else 1.0 / (t.s + 1)),
                           t.s + 1, t.k, side)
        for t in forcing
    ]
    if n == 0 and initial_coeff != 0:
        terms.append(CharacteristicTerm(initial_coeff, 0, m, side))
    return CharacteristicSeries(side, terms)


def outer_coefficient(table: OuterTable, m: int, n: int, side: str = "plus") -> CharacteristicSeries:
    """Public entry point: memoized forcing + characteristic integration."""
    if not (m >= 1 and 0 <= n <= m - 1):
        raise UsageError(f"indices out of range: m={m}, n={n} (need 1 <= m, 0 <= n <= m-1)")
    if m > table.max_order:
        raise UsageError(f"order m={m} exceeds the table cap {table.max_order}")
    key = (m, n, side)
    if key in table:
        return table.entry(m, n, side)
    # populate dependencies: everything with smaller m, then lower n at this m
    for mm in range(1, m):
        for nn in range(0, mm):
            if (mm, nn, side) not in table:
                outer_coefficient(table, mm, nn, side)
    for nn in range(0, n):
        if (m, nn, side) not in table:
            outer_coefficient(table, m, nn, side)
    forcing = forcing_term(table, m, n, side)
    series = integrate_characteristic(forcing, m, n, table.tail_coefficient(side, m))
    table._store(m, n, side, series)
    return series


def outer_partial_sum(table: OuterTable, max_m: int, x: float, t: float,
                      epsilon: float, rho: float, side: str) -> float:
    """nu0 + sum over 1 <= m <= max_m, 0 <= n <= m-1 of rho^(m-n) eps^n u_{m,n}(x,t)."""
    if t < 0:
        raise DomainError("t must be >= 0")
    c = table.characteristic_speed(side)
    total = float(table.state(side))
    for m in range(1, max_m + 1):
        for n in range(0, m):
            series = outer_coefficient(table, m, n, side)
            if not series.terms:
                continue
            total += rho ** (m - n) * epsilon ** n * series.evaluate(x, t, c)
    return total


def format_series_report(table: OuterTable, max_m: int) -> str:
    """Plain-text term table: lines ``side m n s k alpha`` (17 significant digits)."""
    lines = []
    for side in _SIDES:
        for m in range(1, max_m + 1):
            for n in range(0, m):
                for term in outer_coefficient(table, m, n, side):
                    lines.append(f"{side} {m} {n} {term.s} {term.k} {float(term.alpha):.16e}")
    return "\n".join(lines) + ("\n" if lines else "")
