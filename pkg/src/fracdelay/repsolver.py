"""Closed-form solution representation and the weighted-norm Picard iteration.

The linear problem

    D^alpha y(t) - lam * D^beta y(t) = mu * y(t-h) + f(t),   t in (0, T],
    y = phi on [-h, 0],   T = l*h,

(RL derivatives based at -h, 1 < alpha <= 2, 0 < beta < 1, alpha - beta > 1)
is solved by two delayed-ML kernels plus convolution integrals; the nonlinear
f(t, y) case runs a Picard iteration that is a contraction in the weighted
maximum norm ||y||_omega = max |y(t)| / E_{alpha,1}(omega t^alpha).

Quadrature is composite 16-node Gauss-Legendre with mandatory panel splits at
the kernel kinks s = t - k*h and at s = 0, then adaptive panel halving.
Kernel values are memoized per (t - s) offset for the duration of one solve;
the caches only ever store values of pure functions, so results do not depend
on evaluation order or threading.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (
    IterationLimitError,
    NonContractionError,
    QuadratureError,
    ValidationError,
)
from .fraccalc import ShiftedPolynomial, UniformGrid, rl_derivative_poly
from .specfun import (
    DEFAULT_CONTROL,
    SeriesControl,
    delayed_ml_gen,
    delayed_ml_gen_many,
    gamma_fn,
    weight_ml,
)

__all__ = [
    "RhsSpec",
    "ProblemSpec",
    "SolutionTrace",
    "KernelCache",
    "kernel_main",
    "kernel_companion",
    "phi_source",
    "convolve_kernel",
    "homogeneous_at",
    "forced_at",
    "linear_solution",
    "apply_F",
    "weighted_norm",
    "contraction_factor",
    "choose_omega",
    "picard_solve",
    "solver_grid",
]

DEFAULT_QUAD_TOL = 1e-10
MAX_QUAD_DEPTH = 22

_GL_X, _GL_W = leggauss(16)

# shape name -> (value, derivative, sup |shape'|)
_SHAPES: dict[str, tuple[Callable[[float], float], Callable[[float], float], float]] = {
    "zero": (lambda y: 0.0, lambda y: 0.0, 0.0),
    "identity": (lambda y: y, lambda y: 1.0, 1.0),
    "sin": (math.sin, math.cos, 1.0),
    "cos": (math.cos, lambda y: -math.sin(y), 1.0),
    "tanh": (math.tanh, lambda y: 1.0 - math.tanh(y) ** 2, 1.0),
}


@dataclass(frozen=True)
class RhsSpec:
    """Nonlinearity family f(t, y) = poly_part(t) + kappa * shape(y).

    The global Lipschitz constant in y is exact: |kappa| for the bounded-slope
    shapes, 0 for shape "zero".
    """

    poly_part: ShiftedPolynomial = ShiftedPolynomial(0.0, ())
    kappa: float = 0.0
    shape: str = "zero"

    def __post_init__(self) -> None:
        if self.shape not in _SHAPES:
            raise ValidationError(
                f"unknown rhs shape {self.shape!r}; choose from {sorted(_SHAPES)}"
            )

    @property
    def lipschitz(self) -> float:
        return abs(self.kappa) * _SHAPES[self.shape][2]

    def __call__(self, t: float, y: float) -> float:
        return self.poly_part(t) + self.kappa * _SHAPES[self.shape][0](y)

    def dfdy(self, y: float) -> float:
        return self.kappa * _SHAPES[self.shape][1](y)

    def shape_of(self, y: float) -> float:
        return _SHAPES[self.shape][0](y)


@dataclass(frozen=True)
class ProblemSpec:
    """Full Cauchy problem: orders, coefficients, delay, horizon, history, data."""

    alpha: float
    beta: float
    lam: float
    mu: float
    h: float
    l: int
    phi: ShiftedPolynomial
    c1: float = 0.0
    c2: float = 0.0
    rhs: RhsSpec = RhsSpec()

    def __post_init__(self) -> None:
        if not (1.0 < self.alpha <= 2.0):
            raise ValidationError("alpha must lie in (1, 2]")
        if not (0.0 < self.beta < 1.0):
            raise ValidationError("beta must lie in (0, 1)")
        if not (self.alpha - self.beta > 1.0):
            raise ValidationError("alpha - beta must exceed 1")
        if not self.h > 0:
            raise ValidationError("delay h must be positive")
        if int(self.l) != self.l or self.l < 1:
            raise ValidationError("l must be a positive integer (T = l*h)")
        object.__setattr__(self, "l", int(self.l))
        if abs(self.phi.base - (-self.h)) > 1e-12 * max(1.0, self.h):
            raise ValidationError("history polynomial must be expanded about -h")

    @property
    def T(self) -> float:
        return self.l * self.h


@dataclass(frozen=True)
class SolutionTrace:
    """Solution samples on a uniform grid over [-h, T] plus solver metadata."""

    grid: UniformGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.count,):
            raise ValidationError("trace values must match the grid size")
        object.__setattr__(self, "values", v)


def solver_grid(spec: ProblemSpec, divisor: int = 128) -> UniformGrid:
    """Default uniform grid over [-h, T] with step h/divisor."""
    if int(divisor) != divisor or divisor < 1:
        raise ValidationError("grid divisor must be a positive integer")
    step = spec.h / int(divisor)
    return UniformGrid(-spec.h, step, int(divisor) * (spec.l + 1) + 1)


def _check_solver_grid(spec: ProblemSpec, grid: UniformGrid) -> int:
    """Validate grid alignment; return the delay offset in nodes."""
    if abs(grid.t_start + spec.h) > 1e-9:
        raise ValidationError("solver grid must start at -h")
    m = round(spec.h / grid.step)
    if m < 1 or abs(m * grid.step - spec.h) > 1e-9:
        raise ValidationError("h must be an integer number of grid steps")
    if abs(grid.t_end - spec.T) > 1e-9:
        raise ValidationError("solver grid must end at T = l*h")
    return m


def kernel_main(spec: ProblemSpec, t: float, ctrl: SeriesControl | None = None) -> float:
    """Kernel E^{h,alpha}_{alpha-beta,alpha}(lam, mu; t) multiplying the c1 datum."""
    return delayed_ml_gen(
        spec.h, spec.alpha - spec.beta, spec.alpha, spec.alpha, spec.lam, spec.mu, t, ctrl
    )


def kernel_companion(
    spec: ProblemSpec,
    t: float,
    ctrl: SeriesControl | None = None,
    mode: str = "corrected",
) -> float:
    """Companion kernel multiplying the c2 datum: b-slot alpha-1.

    ``mode="corrected"`` keeps the step exponent gamma = alpha (the reading
    under which D^{alpha-2} of the kernel tends to 1 at the base and the delay
    recursion closes); ``mode="literal"`` uses gamma = alpha-1 for comparison.
    """
    if mode == "corrected":
        gamma = spec.alpha
    elif mode == "literal":
        gamma = spec.alpha - 1.0
    else:
        raise ValidationError("companion mode must be 'corrected' or 'literal'")
    return delayed_ml_gen(
        spec.h, spec.alpha - spec.beta, spec.alpha - 1.0, gamma, spec.lam, spec.mu, t, ctrl
    )


class KernelCache:
    """Memoizes kernel values per (t - s) offset for one solve.

    Misses are evaluated through the vectorized series in one batch per
    request.  Values are pure functions of the offset, so concurrent fills
    are benign: the worst case is a duplicate computation of the same number.
    """

    def __init__(
        self,
        spec: ProblemSpec,
        ctrl: SeriesControl | None = None,
        companion_mode: str = "corrected",
    ) -> None:
        self.spec = spec
        self.ctrl = DEFAULT_CONTROL if ctrl is None else ctrl
        self.companion_mode = companion_mode
        if companion_mode == "corrected":
            comp_gamma = spec.alpha
        elif companion_mode == "literal":
            comp_gamma = spec.alpha - 1.0
        else:
            raise ValidationError("companion mode must be 'corrected' or 'literal'")
        ab = spec.alpha - spec.beta
        self._series_args = {
            "main": (spec.h, ab, spec.alpha, spec.alpha, spec.lam, spec.mu),
            "companion": (spec.h, ab, spec.alpha - 1.0, comp_gamma, spec.lam, spec.mu),
        }
        self._values: dict[str, dict[float, float]] = {"main": {}, "companion": {}}

    def fetch_many(self, kernel: str, us) -> np.ndarray:
        table = self._values.get(kernel)
        if table is None:
            raise ValidationError("kernel must be 'main' or 'companion'")
        us = np.asarray(us, dtype=float)
        out = np.empty(us.shape)
        missing: list[int] = []
        flat = us.ravel()
        res = out.ravel()
        for i, u in enumerate(flat):
            v = table.get(float(u))
            if v is None:
                missing.append(i)
            else:
                res[i] = v
        if missing:
            args = self._series_args[kernel]
            vals = delayed_ml_gen_many(*args, flat[missing], self.ctrl)
            for i, v in zip(missing, vals):
                table[float(flat[i])] = float(v)
                res[i] = v
        return out

    def main(self, u: float) -> float:
        return float(self.fetch_many("main", np.array([u]))[0])

    def companion(self, u: float) -> float:
        return float(self.fetch_many("companion", np.array([u]))[0])


def phi_source(spec: ProblemSpec, s: float) -> float:
    """g(s) = D^alpha phi(s) - lam * D^beta phi(s), exact for polynomial phi."""
    if not (-spec.h < s <= 0.0):
        raise ValidationError("phi_source is defined on (-h, 0]")
    return rl_derivative_poly(spec.phi, spec.alpha, s) - spec.lam * rl_derivative_poly(
        spec.phi, spec.beta, s
    )


def convolve_kernel(
    spec: ProblemSpec,
    kernel: str,
    source: Callable[[float], float],
    u0: float,
    u1: float,
    t: float,
    quad_tol: float = DEFAULT_QUAD_TOL,
    ctrl: SeriesControl | None = None,
    cache: KernelCache | None = None,
) -> float:
    """integral_{u0}^{u1} kernel(t - s) * source(s) ds.

    Panels are split at every kink s = t - k*h inside the range and at s = 0,
    then halved adaptively until successive estimates differ by < quad_tol.
    Kernel values come from the cache in one batch per panel.
    """
    if u1 <= u0:
        if u1 < u0:
            raise ValidationError("convolve_kernel requires u0 <= u1")
        return 0.0
    if u1 > t + 1e-12:
        raise ValidationError("convolve_kernel requires u1 <= t")
    if cache is None:
        cache = KernelCache(spec, ctrl)

    def panel(lo: float, hi: float) -> float:
        half = 0.5 * (hi - lo)
        s = 0.5 * (lo + hi) + half * _GL_X
        kv = cache.fetch_many(kernel, t - s)
        sv = np.fromiter((source(x) for x in s), dtype=float, count=s.size)
        return half * float(np.dot(_GL_W, kv * sv))

    def adapt(lo: float, hi: float, whole: float, depth: int) -> float:
        mid = 0.5 * (lo + hi)
        left = panel(lo, mid)
        right = panel(mid, hi)
        if abs(left + right - whole) < quad_tol:
            return left + right
        if depth >= MAX_QUAD_DEPTH:
            raise QuadratureError(
                f"quadrature panel [{lo}, {hi}] did not settle within depth {MAX_QUAD_DEPTH}"
            )
        return adapt(lo, mid, left, depth + 1) + adapt(mid, hi, right, depth + 1)

    cuts = {u0, u1}
    k = 0
    while True:
        s_kink = t - k * spec.h
        if s_kink <= u0:
            break
        if s_kink < u1:
            cuts.add(s_kink)
        k += 1
    if u0 < 0.0 < u1:
        cuts.add(0.0)
    edges = sorted(cuts)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 1e-15 * max(1.0, abs(t)):
            continue
        total += adapt(lo, hi, panel(lo, hi), 0)
    return total


def homogeneous_at(
    spec: ProblemSpec,
    t: float,
    ctrl: SeriesControl | None = None,
    quad_tol: float = DEFAULT_QUAD_TOL,
    cache: KernelCache | None = None,
    companion_mode: str = "corrected",
) -> float:
    """Homogeneous part of the representation at time t in [-h, T]:

        c1 * K1(t+h) + c2 * K2(t+h) + integral_{-h}^{min(t,0)} K1(t-s) g(s) ds,

    with K1/K2 the main/companion kernels and g = phi_source.  The upper limit
    min(t, 0) reflects that g is built from phi, which lives on [-h, 0].
    """
    if not (-spec.h - 1e-12 <= t <= spec.T + 1e-12):
        raise ValidationError("homogeneous_at requires t in [-h, T]")
    if cache is None:
        cache = KernelCache(spec, ctrl, companion_mode)
    val = 0.0
    if spec.c1 != 0.0:
        val += spec.c1 * cache.main(t + spec.h)
    if spec.c2 != 0.0:
        val += spec.c2 * cache.companion(t + spec.h)
    hi = min(t, 0.0)
    if hi > -spec.h:
        val += convolve_kernel(
            spec,
            "main",
            lambda s: phi_source(spec, s),
            -spec.h,
            hi,
            t,
            quad_tol,
            ctrl,
            cache,
        )
    return val


def forced_at(
    spec: ProblemSpec,
    forcing: Callable[[float], float],
    t: float,
    ctrl: SeriesControl | None = None,
    quad_tol: float = DEFAULT_QUAD_TOL,
    cache: KernelCache | None = None,
) -> float:
    """Forced part integral_0^t K1(t-s) forcing(s) ds for t in [0, T]."""
    if not (-1e-12 <= t <= spec.T + 1e-12):
        raise ValidationError("forced_at requires t in [0, T]")
    if t <= 0.0:
        return 0.0
    return convolve_kernel(spec, "main", forcing, 0.0, t, t, quad_tol, ctrl, cache)


def _thread_count() -> int:
    raw = os.environ.get("FRACDELAY_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValidationError(f"FRACDELAY_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ValidationError(f"FRACDELAY_THREADS must be a positive integer, got {raw!r}")
    return n


def _map_nodes(fn: Callable[[float], float], ts) -> list[float]:
    """Deterministic map over grid nodes, optionally thread-parallel."""
    n = _thread_count()
    items = list(ts)
    if n <= 1 or len(items) < 8:
        return [fn(t) for t in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _representation_values(
    spec: ProblemSpec,
    grid: UniformGrid,
    forcing: Callable[[float], float] | None,
    ctrl: SeriesControl | None,
    quad_tol: float,
    cache: KernelCache,
    companion_mode: str,
    homog: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """History = phi exactly; positive nodes = homogeneous + forced parts.

    Returns (values, homog) so the iteration can reuse the homogeneous vector.
    """
    ts = grid.nodes()
    pos = ts > 0.0
    if homog is None:
        homog = np.array(
            _map_nodes(
                lambda t: homogeneous_at(spec, t, ctrl, quad_tol, cache, companion_mode),
                ts[pos],
            )
        )
    values = np.empty(grid.count)
    values[~pos] = spec.phi(ts[~pos])
    if forcing is None:
        values[pos] = homog
    else:
        forced = np.array(
            _map_nodes(
                lambda t: forced_at(spec, forcing, t, ctrl, quad_tol, cache), ts[pos]
            )
        )
        values[pos] = homog + forced
    return values, homog


def linear_solution(
    spec: ProblemSpec,
    grid: UniformGrid,
    ctrl: SeriesControl | None = None,
    quad_tol: float = DEFAULT_QUAD_TOL,
    cache: KernelCache | None = None,
    companion_mode: str = "corrected",
) -> SolutionTrace:
    """Closed-form solution for rhs shape "zero" (forcing depends on t only)."""
    if spec.rhs.shape != "zero":
        raise ValidationError("linear_solution requires rhs shape 'zero'")
    _check_solver_grid(spec, grid)
    if cache is None:
        cache = KernelCache(spec, ctrl, companion_mode)
    forcing = None if spec.rhs.poly_part.is_zero() else spec.rhs.poly_part
    values, _ = _representation_values(
        spec, grid, forcing, ctrl, quad_tol, cache, companion_mode
    )
    return SolutionTrace(grid, values, {"method": "linear", "quad_tol": quad_tol})


def _interpolator(grid: UniformGrid, values: np.ndarray) -> Callable[[float], float]:
    t0, step, n = grid.t_start, grid.step, grid.count

    def at(s: float) -> float:
        x = (s - t0) / step
        i = int(x)
        if i < 0:
            i = 0
        elif i > n - 2:
            i = n - 2
        frac = x - i
        return values[i] * (1.0 - frac) + values[i + 1] * frac

    return at


def apply_F(
    spec: ProblemSpec,
    y: SolutionTrace,
    ctrl: SeriesControl | None = None,
    quad_tol: float = DEFAULT_QUAD_TOL,
    cache: KernelCache | None = None,
    companion_mode: str = "corrected",
    homog: np.ndarray | None = None,
    extra_forcing: Callable[[float], float] | None = None,
) -> SolutionTrace:
    """One application of the fixed-point operator F.

    (F y)(t) keeps the history and homogeneous terms of the representation and
    convolves the main kernel with f(s, y(s)), where y(s) is the piecewise
    linear interpolant of the input trace.
    """
    _check_solver_grid(spec, y.grid)
    if cache is None:
        cache = KernelCache(spec, ctrl, companion_mode)
    y_at = _interpolator(y.grid, y.values)
    rhs = spec.rhs

    if extra_forcing is None:
        def forcing(s: float) -> float:
            return rhs(s, y_at(s))
    else:
        def forcing(s: float) -> float:
            return rhs(s, y_at(s)) + extra_forcing(s)

    values, homog = _representation_values(
        spec, y.grid, forcing, ctrl, quad_tol, cache, companion_mode, homog
    )
    return SolutionTrace(y.grid, values, {"method": "apply_F", "quad_tol": quad_tol})


def weighted_norm(
    ts: np.ndarray,
    values: np.ndarray,
    omega: float,
    alpha: float,
    ctrl: SeriesControl | None = None,
) -> float:
    """||y||_omega = max over nodes in [0, T] of |y(t)| / E_{alpha,1}(omega t^alpha)."""
    if omega <= 0:
        raise ValidationError("weighted_norm requires omega > 0")
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    best = 0.0
    for t, v in zip(ts, values):
        if t < 0.0:
            continue
        best = max(best, abs(v) / weight_ml(alpha, omega, t, ctrl))
    return best


def contraction_factor(spec: ProblemSpec, L_f: float, omega: float) -> float:
    """q = (Gamma(alpha)/omega) * L_f * exp(|lam| T^{alpha-beta} + |mu| T^alpha)."""
    if omega <= 0:
        raise ValidationError("contraction_factor requires omega > 0")
    if L_f < 0:
        raise ValidationError("contraction_factor requires L_f >= 0")
    T = spec.T
    grow = math.exp(abs(spec.lam) * T ** (spec.alpha - spec.beta) + abs(spec.mu) * T**spec.alpha)
    return gamma_fn(spec.alpha) / omega * L_f * grow


def choose_omega(spec: ProblemSpec, L_f: float, margin: float = 2.0) -> float:
    """Weight that makes q = 1/margin: omega = margin * Gamma(alpha) L_f exp(...)."""
    if margin <= 1.0:
        raise ValidationError("omega margin must exceed 1")
    if L_f <= 0:
        raise ValidationError("choose_omega requires L_f > 0")
    T = spec.T
    grow = math.exp(abs(spec.lam) * T ** (spec.alpha - spec.beta) + abs(spec.mu) * T**spec.alpha)
    return margin * gamma_fn(spec.alpha) * L_f * grow


def picard_solve(
    spec: ProblemSpec,
    grid: UniformGrid,
    tol: float = 1e-8,
    max_iter: int = 100,
    margin: float = 2.0,
    omega: float | None = None,
    ctrl: SeriesControl | None = None,
    quad_tol: float = DEFAULT_QUAD_TOL,
    cache: KernelCache | None = None,
    companion_mode: str = "corrected",
    extra_forcing: Callable[[float], float] | None = None,
) -> tuple[SolutionTrace, dict]:
    """Banach fixed-point iteration for the nonlinear problem.

    Starts from the linear solution with forcing f(t, 0), applies F until
    ||y_{k+1} - y_k||_omega <= tol*(1-q)/q, which bounds the weighted-norm
    distance to the fixed point by tol.  The sup-norm delta must also fall
    below tol before stopping: the weight at late times can exceed 1e7, so
    the weighted criterion alone would leave visible absolute error there.
    Returns the trace and a report with {iterations, final_delta, q, omega,
    deltas, ratios} (plus the sup-norm delta history).
    """
    m = _check_solver_grid(spec, grid)
    del m
    L_f = spec.rhs.lipschitz
    if omega is None:
        omega = choose_omega(spec, L_f, margin) if L_f > 0 else 1.0
    q = contraction_factor(spec, L_f, omega)
    if q >= 1.0:
        raise NonContractionError(
            f"contraction factor q={q:.6g} >= 1; increase omega or shrink the problem"
        )
    if cache is None:
        cache = KernelCache(spec, ctrl, companion_mode)
    rhs = spec.rhs
    shape0 = rhs.shape_of(0.0)

    if extra_forcing is None:
        def forcing0(s: float) -> float:
            return rhs.poly_part(s) + rhs.kappa * shape0
    else:
        def forcing0(s: float) -> float:
            return rhs.poly_part(s) + rhs.kappa * shape0 + extra_forcing(s)

    values, homog = _representation_values(
        spec, grid, forcing0, ctrl, quad_tol, cache, companion_mode
    )
    y = SolutionTrace(grid, values)
    ts = grid.nodes()
    threshold = tol * (1.0 - q) / q if q > 0 else math.inf
    deltas: list[float] = []
    deltas_sup: list[float] = []
    for iteration in range(1, max_iter + 1):
        y_next = apply_F(
            spec, y, ctrl, quad_tol, cache, companion_mode, homog, extra_forcing
        )
        diff = y_next.values - y.values
        delta = weighted_norm(ts, diff, omega, spec.alpha, ctrl)
        deltas.append(delta)
        deltas_sup.append(float(np.max(np.abs(diff))))
        y = y_next
        if delta <= threshold and deltas_sup[-1] <= tol:
            ratios = [
                deltas[i + 1] / deltas[i] for i in range(len(deltas) - 1) if deltas[i] > 0
            ]
            report = {
                "iterations": iteration,
                "final_delta": delta,
                "q": q,
                "omega": omega,
                "deltas": deltas,
                "deltas_sup": deltas_sup,
                "ratios": ratios,
            }
            meta = {"method": "picard", "tol": tol, **report}
            return SolutionTrace(grid, y.values, meta), report
    raise IterationLimitError(
        f"picard_solve did not converge in {max_iter} iterations (last delta {deltas[-1]:.3g})"
    )
