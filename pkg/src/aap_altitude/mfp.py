"""Monotonic fractional programming: Dinkelbach outer loop over a polyblock
outer approximation of the parametric problem.

For a fixed ratio ``l`` the parametric objective ``R(h) - l*E(h)`` is written
as ``r1(h) - r2(h, l)`` with both terms nondecreasing. With the auxiliary
variable ``t = r2(h_hi, l) - r2(h, l)`` the problem becomes

    maximize  f(h, t) = r1(h) + t
    over      G = {h <= h_hi, t <= r2(h_hi, l) - r2(h, l)}   (normal)
              H = {h >= h_lo, t >= 0}                        (conormal)

inside the box ``[h_lo, h_hi] x [0, t_max]``. ``f`` is increasing, so its
maximum sits on the upper boundary of ``G`` and the polyblock method applies.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

from . import model
from .results import IterationRecord, SolveResult, Termination
from .errors import DegenerateSegment


class Vertex(NamedTuple):
    h: float
    t: float


@dataclass(frozen=True)
class MfpSettings:
    zeta: float = 1e-6
    e: float = 1e-4
    max_outer: int = 50
    max_inner: int = 100_000
    bisection_tol: float = 1e-6
    h_init: float | None = None

    def __post_init__(self):
        for name in ("zeta", "e", "bisection_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be >= 1")


class _Parametric:
    """Scalar evaluator for ``r1`` and ``r2(., l)``; the polyblock loop calls
    these tens of thousands of times, so it avoids numpy scalar overhead."""

    def __init__(self, coeffs, params, l):
        self.c = coeffs.c_rate
        self.beta = coeffs.beta
        self.l = l
        self.h_lo = coeffs.h_lo
        self.h_hi = coeffs.h_hi
        self.e_slope = model.energy_slope(params)
        self.e_zero = float(model.total_energy(params, 0.0))
        self.r2_top = self.r2(self.h_hi)
        self.t_max = self.r2_top - self.r2(self.h_lo)

    def r1(self, h):
        return self.c * h * h * math.log2(self.beta + h**4)

    def r2(self, h):
        return self.c * h * h * 4.0 * math.log2(h) + self.l * (self.e_slope * h + self.e_zero)

    def f(self, v):
        return self.r1(v.h) + v.t

    def boundary_t(self, h):
        return self.r2_top - self.r2(h)

    def lift(self, v):
        return Vertex(v.h, max(v.t, self.boundary_t(v.h)))

    def contains(self, v):
        return v.h <= self.h_hi and v.t <= self.boundary_t(v.h)


def t_max(coeffs, params, l) -> float:
    return _Parametric(coeffs, params, l).t_max


def parametric_objective(coeffs, params, v: Vertex) -> float:
    return float(model.r1(coeffs, v.h)) + v.t


def in_normal_set(coeffs, params, v: Vertex, l) -> bool:
    return _Parametric(coeffs, params, l).contains(v)


def _bisect_boundary(pb: _Parametric, v, tol):
    """Return ``(inside, outside, halvings)`` bracketing the boundary of G on
    the segment from the box lower corner to ``v``."""
    a = Vertex(pb.h_lo, 0.0)
    if v.h <= a.h and v.t <= a.t:
        raise DegenerateSegment(f"vertex {v} does not dominate the lower corner {a}")
    if pb.contains(v):
        return v, v, 0

    def point(lam):
        return Vertex(a.h + lam * (v.h - a.h), a.t + lam * (v.t - a.t))

    lo, hi = 0.0, 1.0
    halvings = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pb.contains(point(mid)):
            lo = mid
        else:
            hi = mid
        halvings += 1
    return point(lo), point(hi), halvings


def project_to_boundary(coeffs, params, v: Vertex, l, tol) -> Vertex:
    """Feasible endpoint of the bisection bracket on the ray from ``(h_lo, 0)`` to ``v``."""
    return _bisect_boundary(_Parametric(coeffs, params, l), v, tol)[0]


@dataclass
class PolyblockState:
    vertices: list = field(default_factory=list)  # max-heap of (-f, Vertex)
    f_max: float = math.inf
    f_min: float = -math.inf
    incumbent: Vertex | None = None
    iteration: int = 0


@dataclass
class PolyblockResult:
    h_star: float
    value: float
    trace: list
    converged: bool
    state: PolyblockState


def polyblock_solve(coeffs, params, l, settings: MfpSettings | None = None) -> PolyblockResult:
    """Maximize ``R(h) - l*E(h)`` over ``[h_lo, h_hi]`` by polyblock outer approximation.

    The vertex set is replaced using the infeasible end of each bisection
    bracket, so the polyblock always contains G; the feasible end, lifted
    onto the boundary, feeds the incumbent. ``trace`` holds ``(f_max, f_min)``
    after initialization and after every iteration.
    """
    settings = settings or MfpSettings()
    e = settings.e
    pb = _Parametric(coeffs, params, l)
    f = pb.f

    top = Vertex(coeffs.h_hi, pb.t_max)
    lower = Vertex(coeffs.h_lo, 0.0)
    state = PolyblockState(vertices=[(-f(top), top)], f_max=f(top), f_min=f(lower), incumbent=lower)
    trace = [(state.f_max, state.f_min)]
    converged = (state.f_max - state.f_min) / state.f_max <= e

    while not converged and state.iteration < settings.max_inner:
        _, v = heapq.heappop(state.vertices)
        z_in, z_out, _ = _bisect_boundary(pb, v, settings.bisection_tol)
        # Lifting the feasible end onto the boundary keeps it in G and removes
        # the bisection residual from the lower bound.
        z_in = pb.lift(z_in)
        f_z = f(z_in)
        if f_z > state.f_min:
            state.f_min, state.incumbent = f_z, z_in
        if z_out != v:
            for w in (Vertex(z_out.h, v.t), Vertex(v.h, z_out.t)):
                w = Vertex(max(w.h, lower.h), max(w.t, lower.t))
                fw = f(w)
                if fw > state.f_min + e:
                    heapq.heappush(state.vertices, (-fw, w))
        # Lazy pruning: dominated entries only matter once they reach the top.
        while state.vertices and -state.vertices[0][0] <= state.f_min + e:
            heapq.heappop(state.vertices)
        state.iteration += 1
        if state.vertices:
            state.f_max = min(state.f_max, -state.vertices[0][0])
        else:
            # Everything left is within e of the incumbent.
            state.f_max = min(state.f_max, state.f_min + e)
        trace.append((state.f_max, state.f_min))
        converged = (state.f_max - state.f_min) / state.f_max <= e

    h_star = state.incumbent.h
    value = float(model.sum_rate(coeffs, h_star) - l * model.total_energy(params, h_star))
    return PolyblockResult(h_star=h_star, value=value, trace=trace, converged=converged, state=state)


def mfp_optimize(params: model.ScenarioParams, settings: MfpSettings | None = None, on_inner=None) -> SolveResult:
    """Dinkelbach iteration with a polyblock inner solve per ratio.

    ``on_inner(l, result)`` is called after every inner solve, if given.
    """
    settings = settings or MfpSettings()
    start = time.perf_counter()
    coeffs = model.derive_coefficients(params)
    h_k = 0.5 * (coeffs.h_lo + coeffs.h_hi) if settings.h_init is None else float(settings.h_init)
    if not coeffs.h_lo <= h_k <= coeffs.h_hi:
        raise ValueError(f"h_init={h_k} outside [{coeffs.h_lo}, {coeffs.h_hi}]")
    l_k = float(model.gee(params, coeffs, h_k))
    trace = []
    termination = Termination.MAX_ITERS
    inner = None
    for k in range(1, settings.max_outer + 1):
        inner = polyblock_solve(coeffs, params, l_k, settings)
        if on_inner is not None:
            on_inner(l_k, inner)
        h_new = inner.h_star
        l_new = float(model.gee(params, coeffs, h_new))
        trace.append(IterationRecord(k, h_k, l_k, h_new, accepted=l_new > l_k))
        if (l_new - l_k) / l_new < settings.zeta:
            termination = Termination.CONVERGED if inner.converged else Termination.MAX_ITERS
            break
        h_k, l_k = h_new, l_new
    return SolveResult(
        h_opt=float(h_k),
        gee_opt=float(model.gee(params, coeffs, h_k)),
        iterations=len(trace),
        trace=trace,
        termination=termination,
        wall_time_ms=(time.perf_counter() - start) * 1e3,
        bound_trace=inner.trace if inner is not None else None,
    )
