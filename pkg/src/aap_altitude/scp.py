"""Sequential convex programming with a Dinkelbach parameter update.

Each iteration replaces the sum rate by its first-order Taylor expansion
about the current altitude ``h_k`` and the rate floor by its (conservative)
tangent, then maximizes ``S(h, h_k) - l_k * E(h)``. Both the surrogate and the
energy are affine in ``h``, so the inner problem is solved in closed form by
comparing interval endpoints.

An affine surrogate always sends the iterate to an endpoint of the
linearized interval, which on its own can never settle on an interior
optimum. The interval is therefore intersected with a step bound around
``h_k`` that is halved whenever a step fails to raise the efficiency by the
relative tolerance, and the Dinkelbach parameter is refreshed at each
accepted expansion point, ``l_k = S(h_k, h_k) / E(h_k)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from . import model
from .errors import Infeasible
from .results import IterationRecord, SolveResult, Termination


@dataclass(frozen=True)
class ScpSettings:
    zeta: float = 1e-6
    max_iters: int = 100
    h_init: float | None = None
    # Initial step bound as a fraction of the feasible interval width.
    step_fraction: float = 0.25
    min_step_m: float = 1e-5

    def __post_init__(self):
        if not self.zeta > 0:
            raise ValueError("zeta must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.step_fraction > 0:
            raise ValueError("step_fraction must be > 0")
        if not self.min_step_m > 0:
            raise ValueError("min_step_m must be > 0")


def linearized_rate(coeffs: model.DerivedCoefficients, h, h_k):
    return model.sum_rate(coeffs, h_k) + model.sum_rate_derivative(coeffs, h_k) * (h - h_k)


def _linearized_rate_floor_bound(coeffs, params, h_k):
    """Altitude at which the tangent of the edge-user rate hits ``r0_bps``."""
    if params.r0_bps <= 0:
        return math.inf
    b = coeffs.beta
    w = params.bandwidth_hz
    level = w * math.log1p(b / h_k**4) / model.LN2
    slope = 4.0 * w * b / (h_k * (b + h_k**4) * model.LN2)
    return h_k + (level - params.r0_bps) / slope


def linearized_feasible_interval(coeffs: model.DerivedCoefficients, params: model.ScenarioParams, h_k):
    """Altitudes satisfying the altitude bounds and the linearized rate floor.

    The edge rate is convex and decreasing in ``h``, so its tangent
    underestimates it and every point of this interval meets the true floor.
    """
    lo = params.h_min_m
    hi = min(params.h_max_m, _linearized_rate_floor_bound(coeffs, params, h_k))
    if hi < lo:
        raise Infeasible(f"linearized rate floor at h_k={h_k:.6g} m leaves no altitude above h_min_m")
    return lo, hi


def _affine_argmax(slope, lo, hi):
    # Ties go to the lower (cheaper) altitude.
    return hi if slope > 0 else lo


def scp_subproblem(coeffs, params, h_k, l, bounds=None):
    """Maximize ``S(h, h_k) - l*E(h)`` over the linearized interval.

    ``bounds`` optionally narrows the interval further (the step bound).
    """
    lo, hi = linearized_feasible_interval(coeffs, params, h_k)
    if bounds is not None:
        lo, hi = max(lo, bounds[0]), min(hi, bounds[1])
    slope = model.sum_rate_derivative(coeffs, h_k) - l * model.energy_slope(params)
    return _affine_argmax(float(slope), lo, hi)


def _surrogate_ratio(coeffs, params, h, h_k):
    return float(linearized_rate(coeffs, h, h_k) / model.total_energy(params, h))


def scp_optimize(params: model.ScenarioParams, settings: ScpSettings | None = None) -> SolveResult:
    settings = settings or ScpSettings()
    start = time.perf_counter()
    coeffs = model.derive_coefficients(params)
    if settings.h_init is None:
        h_k = 0.5 * (coeffs.h_lo + coeffs.h_hi)
    else:
        if not coeffs.h_lo <= settings.h_init <= coeffs.h_hi:
            raise ValueError(f"h_init={settings.h_init} outside [{coeffs.h_lo}, {coeffs.h_hi}]")
        h_k = float(settings.h_init)

    l_k = _surrogate_ratio(coeffs, params, h_k, h_k)
    step = settings.step_fraction * (coeffs.h_hi - coeffs.h_lo)
    trace = []
    termination = Termination.MAX_ITERS
    for k in range(1, settings.max_iters + 1):
        h_new = scp_subproblem(coeffs, params, h_k, l_k, bounds=(h_k - step, h_k + step))
        l_new = _surrogate_ratio(coeffs, params, h_new, h_new)
        moved = h_new != h_k and l_new > l_k
        trace.append(IterationRecord(k, h_k, l_k, h_new, step, moved))
        if moved:
            h_k, l_k = h_new, l_new
            if (l_new - trace[-1].l_k) / l_new >= settings.zeta:
                continue
        # No gain above tolerance: tighten the step bound until it bottoms out.
        if step <= settings.min_step_m:
            termination = Termination.CONVERGED
            break
        step *= 0.5
    # Last accepted iterate; every accepted step raised the efficiency.
    h_opt = h_k
    gee_opt = float(model.gee(params, coeffs, h_opt))
    return SolveResult(
        h_opt=float(h_opt),
        gee_opt=gee_opt,
        iterations=len(trace),
        trace=trace,
        termination=termination,
        wall_time_ms=(time.perf_counter() - start) * 1e3,
    )
