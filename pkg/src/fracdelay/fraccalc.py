"""Riemann-Liouville fractional calculus helpers.

Polynomial history data is kept in exactly-differentiable form
(:class:`ShiftedPolynomial`), so RL derivatives and integrals of the history
are evaluated by the power rule with no numerical differentiation.  Sampled
data on a :class:`UniformGrid` goes through the Gruenwald-Letnikov weights,
which cover both orders of the problem (beta in (0,1) and alpha in (1,2])
with a single recurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .specfun import gamma_fn, recip_gamma

__all__ = [
    "UniformGrid",
    "ShiftedPolynomial",
    "rl_derivative_power",
    "rl_derivative_poly",
    "rl_integral_poly",
    "gl_weights",
    "gl_derivative",
    "derive_initial_data",
]

_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class UniformGrid:
    """Nodes t_start + i*step for i = 0..count-1."""

    t_start: float
    step: float
    count: int

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ValidationError("grid step must be positive")
        if int(self.count) != self.count or self.count < 2:
            raise ValidationError("grid count must be an integer >= 2")
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_range(cls, t_start: float, t_end: float, step: float) -> "UniformGrid":
        span = t_end - t_start
        n = round(span / step)
        if n < 1 or abs(n * step - span) > _ALIGN_TOL * max(1.0, abs(span)):
            raise ValidationError(
                f"step {step} does not tile [{t_start}, {t_end}] exactly"
            )
        return cls(t_start, step, n + 1)

    @property
    def t_end(self) -> float:
        return self.t_start + (self.count - 1) * self.step

    def nodes(self) -> np.ndarray:
        return self.t_start + self.step * np.arange(self.count)

    def index_of(self, t: float) -> int:
        i = round((t - self.t_start) / self.step)
        if i < 0 or i >= self.count or abs(self.t_start + i * self.step - t) > _ALIGN_TOL:
            raise ValidationError(f"t={t} is not a node of {self}")
        return i


@dataclass(frozen=True)
class ShiftedPolynomial:
    """Polynomial sum_m c_m (t - base)^m with an explicit expansion point."""

    base: float
    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, t):
        # Horner; works elementwise on numpy arrays too.
        u = t - self.base
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * u + c
        return acc

    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)


def rl_derivative_power(a: float, nu: float, order: float, t: float) -> float:
    """RL power rule: D^order (t-a)^nu = Gamma(nu+1)/Gamma(nu-order+1) (t-a)^{nu-order}.

    Uses the reciprocal-gamma convention, so the result is exactly 0 whenever
    nu - order + 1 is a nonpositive integer (e.g. D^alpha of (t-a)^{alpha-1}).
    """
    if nu <= -1:
        raise ValidationError("rl_derivative_power requires nu > -1")
    if order < 0:
        raise ValidationError("rl_derivative_power requires order >= 0")
    if t <= a:
        raise ValidationError("rl_derivative_power requires t > a")
    coef = gamma_fn(nu + 1.0) * recip_gamma(nu - order + 1.0)
    if coef == 0.0:
        return 0.0
    return coef * (t - a) ** (nu - order)


def rl_derivative_poly(p: ShiftedPolynomial, order: float, t: float) -> float:
    """Term-by-term RL derivative of a shifted polynomial at t > base."""
    total = 0.0
    for m, c in enumerate(p.coeffs):
        if c != 0.0:
            total += c * rl_derivative_power(p.base, float(m), order, t)
    return total


def rl_integral_poly(p: ShiftedPolynomial, order: float, t: float) -> float:
    """RL integral I^order of a shifted polynomial; exponents are raised.

    Each term maps to Gamma(m+1)/Gamma(m+order+1) (t-a)^{m+order}.  The value
    at t == base is 0 (all exponents are positive there).
    """
    if order <= 0:
        raise ValidationError("rl_integral_poly requires order > 0")
    if t < p.base:
        raise ValidationError("rl_integral_poly requires t >= base")
    if t == p.base:
        return 0.0
    total = 0.0
    for m, c in enumerate(p.coeffs):
        if c != 0.0:
            coef = gamma_fn(m + 1.0) * recip_gamma(m + order + 1.0)
            total += c * coef * (t - p.base) ** (m + order)
    return total


def gl_weights(order: float, count: int) -> np.ndarray:
    """First `count` Gruenwald-Letnikov weights w_j = (-1)^j C(order, j).

    Computed by the stable recurrence w_0 = 1, w_j = w_{j-1} (1 - (order+1)/j).
    """
    if count < 1:
        raise ValidationError("gl_weights requires count >= 1")
    if count == 1:
        return np.ones(1)
    j = np.arange(1, count)
    return np.concatenate(([1.0], np.cumprod(1.0 - (order + 1.0) / j)))


def gl_derivative(samples: np.ndarray, step: float, order: float) -> np.ndarray:
    """GL approximation of the RL derivative based at the first node.

    At node i the value is step^{-order} * sum_{j=0}^{i} w_j samples[i-j]; the
    first node therefore gets step^{-order} * samples[0].
    """
    if not 0.0 < order <= 2.0:
        raise ValidationError("gl_derivative requires order in (0, 2]")
    if step <= 0:
        raise ValidationError("gl_derivative requires step > 0")
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1:
        raise ValidationError("gl_derivative expects a 1-D sample array")
    w = gl_weights(order, samples.size)
    conv = np.convolve(samples, w)[: samples.size]
    return step ** (-order) * conv


def derive_initial_data(phi: ShiftedPolynomial, alpha: float) -> tuple[float, float]:
    """Default (c1, c2) data for polynomial history.

    c1 = lim_{t -> base+} D^{alpha-1} phi and c2 = lim I^{2-alpha} phi.  For a
    monomial (t-base)^m the D^{alpha-1} limit is 0 when m+1-alpha > 0, the
    m-th coefficient times m! when m+1-alpha == 0, and infinite otherwise
    (unless the gamma prefactor vanishes).  An infinite limit is a validation
    error: supply explicit data instead.
    """
    c1 = 0.0
    for m, c in enumerate(phi.coeffs):
        if c == 0.0:
            continue
        rc = recip_gamma(m - alpha + 2.0)
        if rc == 0.0:
            continue
        expo = m + 1.0 - alpha
        if expo < -1e-12:
            raise ValidationError(
                "history polynomial has an infinite D^{alpha-1} limit at the base; "
                "set c1 explicitly"
            )
        if abs(expo) <= 1e-12:
            c1 += c * gamma_fn(m + 1.0) * rc
    c2 = 0.0
    for m, c in enumerate(phi.coeffs):
        if c == 0.0:
            continue
        expo = m + 2.0 - alpha
        if abs(expo) <= 1e-12:  # only m=0 with alpha=2
            c2 += c * gamma_fn(m + 1.0) * recip_gamma(m - alpha + 3.0)
    return c1, c2
