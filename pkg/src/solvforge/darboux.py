"""Single generalized Darboux step and the two-step chain.

Given a nodeless seed y(r) solving the base problem at a fixed spectral
parameter g'^2, one step produces

    V = V0 - 2 sqrt(h) d/dr[(1/sqrt(h)) d/dr ln y] + sqrt(h) d^2/dr^2 (1/sqrt(h))

and maps any base solution phi0 at gamma^2 to

    phi = W{y, phi0} / (sqrt(h) y).

All derivatives are evaluated in closed form: the weight h is analytic, the
log-derivative u = y'/y comes from the carried channels, and u' = (V0 -
g'^2 h) - u^2 follows from the equation itself, so no finite differencing
enters the construction.  The Wronskian derivative uses
dW/dr = h (g'^2 - gamma^2) y phi0.

The second chain step combines the inverted seed with the prefix integral
P(r) = 1 + C * int h y^2; the first-step terms cancel and the chained
potential collapses to V0 - 2 sqrt(h) d/dr[(1/sqrt(h)) d/dr ln P], with the
solution map

    phi = phi0 - C y W{y, phi0} / (P (g'^2 - gamma^2)).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import (
    DirectionMismatchError,
    DuplicateSpectralError,
    GridMismatchError,
    SingularPotentialError,
    SingularSeedError,
)
from .expr import AnalyticExpr, call, evaluate_on_grid
from .grid import Direction, RadialGrid, SampledField, signed_prefix
from .solver import CustomBC, JostAtRight, RegularAtLeft, Solution

__all__ = [
    "DarbouxTransform",
    "darboux_transform",
    "darboux_potential",
    "darboux_solution",
    "chain_second_step",
    "EPS_NODE",
]

#: seed values smaller than this flag a node of the seed
EPS_NODE = 1e-10


def _as_field(h: AnalyticExpr | SampledField, grid: RadialGrid) -> SampledField:
    if isinstance(h, SampledField):
        if h.grid != grid:
            raise GridMismatchError("weight sampled on a different grid")
        return h
    return evaluate_on_grid(h, grid)


def _seed_zero_masks(y: np.ndarray, eps: float) -> np.ndarray:
    """Mask of near-zero seed entries; interior zeros or sign changes are fatal.

    Endpoint zeros are tolerated (regular seeds vanish at the origin); the
    returned boolean mask marks them so callers can patch those nodes.
    """
    small = np.abs(y) < eps
    if np.any(small[1:-1]):
        raise SingularSeedError(int(np.flatnonzero(small[1:-1])[0]) + 1)
    sign_change = y[:-1] * y[1:] < 0.0
    if np.any(sign_change):
        raise SingularSeedError(int(np.flatnonzero(sign_change)[0]) + 1)
    return small


def _extrapolate(vals: np.ndarray, idx: int) -> float:
    """Quadratic extrapolation to an endpoint from its three neighbours."""
    if idx == 0:
        return 3.0 * vals[1] - 3.0 * vals[2] + vals[3]
    return 3.0 * vals[-2] - 3.0 * vals[-3] + vals[-4]


def darboux_potential(
    seed: Solution,
    h: AnalyticExpr,
    V0: SampledField,
    *,
    eps_node: float = EPS_NODE,
) -> SampledField:
    """Transformed potential from one Darboux step.

    The seed must be nodeless on the open interval; a zero at an endpoint is
    allowed (the true potential diverges there, e.g. a centrifugal-type term)
    and the endpoint entry is filled by extrapolation so the field stays
    finite.  An interior zero raises SingularSeedError naming the node.
    """
    grid = V0.grid
    if seed.grid != grid:
        raise GridMismatchError("seed and base potential live on different grids")
    hf = _as_field(h, grid)
    s_expr = 1.0 / call("sqrt", h)
    s1_expr = s_expr.derivative()
    s2_expr = s1_expr.derivative()
    s = s_expr.evaluate(grid.r)
    s1 = s1_expr.evaluate(grid.r)
    s2 = s2_expr.evaluate(grid.r)
    s3 = s2_expr.derivative().evaluate(grid.r)

    y, yd = seed.values, seed.derivs
    patch = _seed_zero_masks(y, eps_node)
    y_safe = np.where(patch, 1.0, y)

    rt = np.sqrt(hf.values)
    rtd = hf.derivs / (2.0 * rt)
    u = yd / y_safe
    A = V0.values - seed.gamma_sq * hf.values
    Ad = V0.derivs - seed.gamma_sq * hf.derivs
    up = A - u * u  # u' from the governing equation

    bracket = s1 * u + s * (A - u * u)
    bracket_d = s2 * u + s1 * up + s1 * (A - u * u) + s * (Ad - 2.0 * u * up)

    v = V0.values - 2.0 * rt * bracket + rt * s2
    vd = V0.derivs - 2.0 * (rtd * bracket + rt * bracket_d) + rtd * s2 + rt * s3

    if np.any(patch):
        v = v.copy()
        vd = vd.copy()
        for idx in np.flatnonzero(patch):
            v[idx] = _extrapolate(v, idx)
            vd[idx] = _extrapolate(vd, idx)
    return SampledField(grid, v, vd)


def darboux_solution(
    seed: Solution,
    h: AnalyticExpr | SampledField,
    phi0: Solution,
    *,
    eps_node: float = EPS_NODE,
) -> Solution:
    """Map a base solution through the Darboux step: W{y, phi0} / (sqrt(h) y).

    The derivative channel is assembled from dW/dr = h (g'^2 - gamma^2) y phi0,
    so the output carries exact derivatives.  Where both the seed and phi0
    vanish at an endpoint the 0/0 limit is zero (the transform preserves
    regularity); a lone seed zero there makes the image singular and raises.
    """
    grid = phi0.grid
    if seed.grid != grid:
        raise GridMismatchError("seed and solution live on different grids")
    hf = _as_field(h, grid)

    y, yd = seed.values, seed.derivs
    p, pd = phi0.values, phi0.derivs
    patch = _seed_zero_masks(y, eps_node)
    y_safe = np.where(patch, 1.0, y)

    w = y * pd - yd * p
    wd = hf.values * (seed.gamma_sq - phi0.gamma_sq) * y * p

    rt = np.sqrt(hf.values)
    den = rt * y_safe
    dend = hf.derivs / (2.0 * rt) * y_safe + rt * yd

    out = w / den
    outd = (wd * den - w * dend) / (den * den)

    if np.any(patch):
        out = out.copy()
        outd = outd.copy()
        w_scale = float(np.max(np.abs(w))) + 1.0
        for idx in np.flatnonzero(patch):
            if abs(w[idx]) > 1e-8 * w_scale:
                raise SingularSeedError(int(idx))
            out[idx] = 0.0
            outd[idx] = 0.0
    return Solution(
        phi0.gamma_sq,
        SampledField(grid, out, outd),
        CustomBC(float(out[0]), float(outd[0]), "left"),
    )


@dataclass(frozen=True)
class DarbouxTransform:
    """One validated Darboux step: seed, weight, base and transformed potential."""

    seed: Solution
    h: AnalyticExpr
    h_field: SampledField
    base_potential: SampledField
    new_potential: SampledField

    def apply(self, phi0: Solution) -> Solution:
        return darboux_solution(self.seed, self.h_field, phi0)


def darboux_transform(seed: Solution, h: AnalyticExpr, V0: SampledField) -> DarbouxTransform:
    grid = V0.grid
    return DarbouxTransform(
        seed=seed,
        h=h,
        h_field=_as_field(h, grid),
        base_potential=V0,
        new_potential=darboux_potential(seed, h, V0),
    )


def _check_direction(bc, direction: Direction) -> None:
    if isinstance(bc, RegularAtLeft) and direction is not Direction.FROM_LEFT:
        raise DirectionMismatchError("regular seeds pair with the from-left integral")
    if isinstance(bc, JostAtRight) and direction is not Direction.FROM_RIGHT:
        raise DirectionMismatchError("decaying (Jost-type) seeds pair with the from-right integral")


def chain_second_step(
    first: DarbouxTransform,
    C: float,
    direction: Direction,
) -> Tuple[SampledField, Callable[[Solution], Solution]]:
    """Second step of the two-step chain built on `first`.

    Returns the chained potential and the solution map phi0 -> phi.  The
    map is the identity when C = 0.  P(r) = 1 + C * int h y^2 must stay
    positive; a non-positive value (C too negative) raises
    SingularPotentialError naming the node.
    """
    seed = first.seed
    _check_direction(seed.bc, direction)
    grid = seed.grid
    hf = first.h_field
    hv, hd = hf.values, hf.derivs
    hdd = first.h.derivative().derivative().evaluate(grid.r)
    y, yd = seed.values, seed.derivs
    gamma_prime_sq = seed.gamma_sq

    pref = signed_prefix(hf * seed.field * seed.field, direction)
    P = 1.0 + C * pref.values
    bad = P <= 0.0
    if np.any(bad):
        raise SingularPotentialError(int(np.flatnonzero(bad)[0]), what="chain factor P")

    ydd = (first.base_potential.values - gamma_prime_sq * hv) * y
    N = C * hv * y * y
    Nd = C * (hd * y * y + 2.0 * hv * y * yd)
    Ndd = C * (hdd * y * y + 4.0 * hd * y * yd + 2.0 * hv * (yd * yd + y * ydd))

    t = N / P
    td = Nd / P - t * t
    tdd = Ndd / P - 3.0 * N * Nd / (P * P) + 2.0 * t * t * t

    ratio = hd / hv
    v2 = first.base_potential.values + ratio * t - 2.0 * td
    ratio_d = hdd / hv - ratio * ratio
    v2d = first.base_potential.derivs + ratio_d * t + ratio * td - 2.0 * tdd
    potential = SampledField(grid, v2, v2d)

    def solution_map(phi0: Solution) -> Solution:
        if phi0.grid != grid:
            raise GridMismatchError("solution lives on a different grid")
        delta = gamma_prime_sq - phi0.gamma_sq
        if abs(delta) < 1e-8:
            raise DuplicateSpectralError(
                "chain map is singular at the seed spectral parameter; "
                f"gamma^2 = {phi0.gamma_sq} coincides with the seed value"
            )
        p, pd = phi0.values, phi0.derivs
        w = y * pd - yd * p
        wd = hv * delta * y * p
        gfac = y * w / P
        gfac_d = (yd * w + y * wd - gfac * N) / P
        out = p - C * gfac / delta
        outd = pd - C * gfac_d / delta
        return Solution(
            phi0.gamma_sq,
            SampledField(grid, out, outd),
            CustomBC(float(out[0]), float(outd[0]), "left"),
        )

    return potential, solution_map
