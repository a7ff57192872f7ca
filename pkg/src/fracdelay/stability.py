"""Ulam-Hyers stability: the explicit constant and an empirical check.

A function x is an approximate solution when its equation residual stays
within epsilon; here such an x is manufactured directly by solving the
equation with forcing f + epsilon*g for a bounded shape g (sup|g| <= 1).
The check then verifies the weighted-norm distance to the true solution y
against epsilon times the explicit stability constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import NonContractionError, ValidationError
from .fraccalc import UniformGrid
from .repsolver import (
    KernelCache,
    ProblemSpec,
    SolutionTrace,
    choose_omega,
    contraction_factor,
    picard_solve,
    weighted_norm,
)
from .specfun import SeriesControl

__all__ = ["PerturbationSpec", "UhResult", "uh_constant", "perturbed_solve"]


@dataclass(frozen=True)
class PerturbationSpec:
    """Perturbation epsilon * g_shape(t) with sup |g_shape| <= 1 on [0, T].

    epsilon = 0 is allowed and makes the perturbed and exact problems
    coincide.
    """

    epsilon: float
    g_shape: Callable[[float], float]

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValidationError("epsilon must be nonnegative")

    def __call__(self, t: float) -> float:
        return self.epsilon * self.g_shape(t)


class UhResult(NamedTuple):
    x: SolutionTrace
    y: SolutionTrace
    lhs: float
    rhs_bound: float


def uh_constant(spec: ProblemSpec, L_f: float, omega: float) -> float:
    """c = T^{alpha-1} exp(|lam| T^{alpha-beta} + |mu| T^alpha) / (1 - q)."""
    q = contraction_factor(spec, L_f, omega)
    if q >= 1.0:
        raise NonContractionError(f"contraction factor q={q:.6g} >= 1")
    T = spec.T
    numer = T ** (spec.alpha - 1.0) * math.exp(
        abs(spec.lam) * T ** (spec.alpha - spec.beta) + abs(spec.mu) * T**spec.alpha
    )
    return numer / (1.0 - q)


def perturbed_solve(
    spec: ProblemSpec,
    pert: PerturbationSpec,
    grid: UniformGrid,
    tol: float = 1e-8,
    margin: float = 2.0,
    ctrl: SeriesControl | None = None,
    quad_tol: float = 1e-10,
    companion_mode: str = "corrected",
    cache: KernelCache | None = None,
) -> UhResult:
    """Solve the perturbed and exact problems and evaluate the UH inequality.

    Both solves share one kernel cache and the same weight omega, so lhs and
    rhs_bound refer to the same norm.
    """
    ts = grid.nodes()
    g_samples = np.array([pert.g_shape(t) for t in ts[ts >= 0.0]])
    if np.max(np.abs(g_samples)) > 1.0 + 1e-12:
        raise ValidationError("g_shape must satisfy sup |g_shape| <= 1 on [0, T]")

    L_f = spec.rhs.lipschitz
    omega = choose_omega(spec, L_f, margin) if L_f > 0 else 1.0
    if cache is None:
        cache = KernelCache(spec, ctrl, companion_mode)
    x, _ = picard_solve(
        spec,
        grid,
        tol=tol,
        omega=omega,
        ctrl=ctrl,
        quad_tol=quad_tol,
        cache=cache,
        companion_mode=companion_mode,
        extra_forcing=pert if pert.epsilon != 0.0 else None,
    )
    y, _ = picard_solve(
        spec,
        grid,
        tol=tol,
        omega=omega,
        ctrl=ctrl,
        quad_tol=quad_tol,
        cache=cache,
        companion_mode=companion_mode,
    )
    lhs = weighted_norm(ts, x.values - y.values, omega, spec.alpha, ctrl)
    rhs_bound = pert.epsilon * uh_constant(spec, L_f, omega)
    return UhResult(x, y, lhs, rhs_bound)
