"""Brute-force reference optimizer: dense grid plus golden-section polish.

Deliberately uses nothing but objective evaluations, so it stays independent
of the derivative and decomposition machinery the solvers rely on.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import model

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
REFINE_WIDTH_M = 1e-4


@dataclass(frozen=True)
class OracleResult:
    h_star: float
    gee_star: float
    grid_points: int
    refined: bool


def golden_section_max(func, a, b, tol=REFINE_WIDTH_M):
    """Maximize a unimodal scalar ``func`` on ``[a, b]`` until the bracket is
    narrower than ``tol``. Returns ``(x, func(x))`` for the bracket midpoint."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = func(d)
    x = 0.5 * (a + b)
    return x, func(x)


def argmax_on_grid(func, lo, hi, n_points):
    """Grid search over ``[lo, hi]`` with golden-section refinement of the
    cell pair around the best sample.

    ``func`` must be vectorized. Ties go to the lowest grid index. The refined
    point is only reported if it beats the raw grid maximum, which covers the
    case where the bracket is not unimodal.
    """
    if n_points < 3:
        raise ValueError("n_points must be >= 3")
    grid = np.linspace(lo, hi, n_points)
    values = np.asarray(func(grid), dtype=float)
    i = int(np.argmax(values))
    best_h, best_v = float(grid[i]), float(values[i])
    a = float(grid[max(i - 1, 0)])
    b = float(grid[min(i + 1, n_points - 1)])
    if b - a <= REFINE_WIDTH_M:
        return best_h, best_v, False
    h_ref, v_ref = golden_section_max(lambda x: float(func(np.float64(x))), a, b)
    if v_ref > best_v:
        return h_ref, v_ref, True
    return best_h, best_v, False


def grid_argmax(params: model.ScenarioParams, n_points: int = 100_000) -> OracleResult:
    coeffs = model.derive_coefficients(params)

    def objective(h):
        return model.gee(params, coeffs, h)

    h, v, refined = argmax_on_grid(objective, coeffs.h_lo, coeffs.h_hi, n_points)
    return OracleResult(h_star=h, gee_star=v, grid_points=n_points, refined=refined)


@dataclass(frozen=True)
class CurveRow:
    h: float
    gee: float
    sum_rate: float
    e_total: float


def gee_curve(params: model.ScenarioParams, n_points: int, h_start=None, h_stop=None) -> list[CurveRow]:
    """Sample efficiency on a uniform grid over ``[h_min_m, h_max_m]``.

    The rate floor is ignored here so the whole curve is available for
    plotting. ``h_start``/``h_stop`` narrow the range.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    lo = params.h_min_m if h_start is None else h_start
    hi = params.h_max_m if h_stop is None else h_stop
    # Coefficients other than the rate cap do not depend on r0.
    coeffs = model.derive_coefficients(dataclasses.replace(params, r0_bps=0.0))
    h = np.linspace(lo, hi, n_points)
    rate = model.sum_rate(coeffs, h)
    e_total = model.total_energy(params, h)
    g = rate / e_total
    return [CurveRow(float(a), float(b), float(c), float(d)) for a, b, c, d in zip(h, g, rate, e_total)]

