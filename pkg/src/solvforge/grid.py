"""Uniform radial grids and sampled fields.

A SampledField carries function values together with first derivatives at
every node, so that Wronskians and the algebraic transform formulas never
have to differentiate numerically.  Quadrature is composite Simpson with a
derivative-corrected trapezoid closing the odd panel, which keeps prefix
integrals exact for polynomials up to degree three and fourth-order
accurate for smooth integrands.

All types are immutable after construction; operations are pure and safe
to use from concurrent contexts.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from numbers import Real

import numpy as np

from .errors import GridMismatchError


class Direction(enum.Enum):
    """Orientation of a cumulative integral.

    FROM_LEFT accumulates from the left endpoint a (spectral data anchored at
    the origin, the convention for regular solutions); FROM_RIGHT accumulates
    from the right endpoint b (the convention for decaying, Jost-type
    solutions).
    """

    FROM_LEFT = "from_left"
    FROM_RIGHT = "from_right"


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid of n nodes on [a, b]."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("grid endpoints must be finite")
        if not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if self.n < 3:
            raise ValueError(f"need at least 3 nodes, got n={self.n}")

    @property
    def step(self) -> float:
        return (self.b - self.a) / (self.n - 1)

    @cached_property
    def r(self) -> np.ndarray:
        nodes = np.linspace(self.a, self.b, self.n)
        nodes.flags.writeable = False
        return nodes


def _as_readonly(x, n: int, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"{what} must have shape ({n},), got {arr.shape}")
    if not np.isfinite(arr).all():
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise ValueError(f"{what} contains a non-finite entry at node {bad}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SampledField:
    """Function values and first derivatives on a radial grid.

    Arithmetic operators combine both channels (product and quotient rules),
    so composite fields keep exact derivative information.
    """

    grid: RadialGrid
    values: np.ndarray
    derivs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_readonly(self.values, self.grid.n, "values"))
        object.__setattr__(self, "derivs", _as_readonly(self.derivs, self.grid.n, "derivs"))

    def _coerce(self, other) -> "SampledField":
        if isinstance(other, SampledField):
            if other.grid != self.grid:
                raise GridMismatchError("fields live on different grids")
            return other
        if isinstance(other, Real):
            return constant_field(self.grid, float(other))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return SampledField(self.grid, self.values + o.values, self.derivs + o.derivs)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return SampledField(self.grid, self.values - o.values, self.derivs - o.derivs)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return SampledField(self.grid, o.values - self.values, o.derivs - self.derivs)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return SampledField(
            self.grid,
            self.values * o.values,
            self.derivs * o.values + self.values * o.derivs,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return SampledField(
            self.grid,
            self.values / o.values,
            (self.derivs * o.values - self.values * o.derivs) / (o.values * o.values),
        )

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o / self

    def __neg__(self):
        return SampledField(self.grid, -self.values, -self.derivs)


def constant_field(grid: RadialGrid, value: float) -> SampledField:
    v = np.full(grid.n, float(value))
    return SampledField(grid, v, np.zeros(grid.n))


def field_from_arrays(grid: RadialGrid, values, derivs) -> SampledField:
    """Convenience constructor that broadcasts scalars."""
    values = np.broadcast_to(np.asarray(values, dtype=float), (grid.n,))
    derivs = np.broadcast_to(np.asarray(derivs, dtype=float), (grid.n,))
    return SampledField(grid, values.copy(), derivs.copy())


def wronskian(f: SampledField, g: SampledField) -> SampledField:
    """W{f, g} = f g' - f' g, node-wise, from the carried derivatives.

    The derivative channel of the result would need second derivatives of f
    and g, which value data alone does not determine.  It is filled with an
    O(step^2) finite difference of the W values as a convenience; transform
    code replaces it with the exact spectral identity W' = h (g1^2 - g2^2) f g
    whenever f and g solve the radial equation.
    """
    if f.grid != g.grid:
        raise GridMismatchError("wronskian operands live on different grids")
    w = f.values * g.derivs - f.derivs * g.values
    dw = np.gradient(w, f.grid.step)
    return SampledField(f.grid, w, dw)


def _prefix_from_left(values: np.ndarray, derivs: np.ndarray, step: float) -> np.ndarray:
    """Cumulative integral from the first node, O(step^4).

    Even node offsets use composite Simpson over panel pairs; an odd final
    panel is closed with the derivative-corrected trapezoid
    h (f0 + f1)/2 + h^2 (f0' - f1')/12, which is likewise exact for cubics.
    """
    n = values.shape[0]
    out = np.zeros(n)
    pair = (step / 3.0) * (values[0:-2:2] + 4.0 * values[1:-1:2] + values[2::2])
    out[2::2] = np.cumsum(pair)
    panel = (step / 2.0) * (values[:-1] + values[1:]) + (step * step / 12.0) * (
        derivs[:-1] - derivs[1:]
    )
    out[1::2] = out[0:-1:2] + panel[0::2]
    return out


def integrate_prefix(f: SampledField, direction: Direction) -> SampledField:
    """Cumulative integral of f: from a to r (FROM_LEFT) or r to b (FROM_RIGHT).

    The derivative channel of the result is exact: +f values for FROM_LEFT,
    -f values for FROM_RIGHT.
    """
    step = f.grid.step
    if direction is Direction.FROM_LEFT:
        vals = _prefix_from_left(f.values, f.derivs, step)
        return SampledField(f.grid, vals, f.values)
    rev = _prefix_from_left(f.values[::-1], -f.derivs[::-1], step)
    return SampledField(f.grid, rev[::-1], -f.values)


def signed_prefix(f: SampledField, direction: Direction) -> SampledField:
    """Oriented prefix integral vanishing at the anchor endpoint.

    FROM_LEFT gives integral from a to r; FROM_RIGHT gives the integral from
    b to r (the negative of the r-to-b integral).  With this orientation the
    derivative is +f in both cases, which is the form entering the Wronskian
    integral identity and the P-matrix diagonal.
    """
    out = integrate_prefix(f, direction)
    if direction is Direction.FROM_RIGHT:
        return -out
    return out
