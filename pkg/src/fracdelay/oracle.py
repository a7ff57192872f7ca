"""Independent ground truth: implicit Grünwald-Letnikov time stepping.

Both RL derivatives are discretized over the whole trajectory back to the
base -h, so the history enters through the memory sums and no separate
initial-condition translation is needed.  Each step solves a scalar equation
that is linear in y_i apart from f(t_i, y_i); Newton with a fixed-point
fallback handles the nonlinearity.

This module deliberately shares no series/quadrature code with the
representation solver: agreement between the two is the main correctness
check for both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NewtonError, ValidationError
from .fraccalc import UniformGrid, gl_derivative, gl_weights
from .repsolver import ProblemSpec, SolutionTrace

__all__ = ["OracleConfig", "ResidualReport", "gl_solve", "residual_check"]

_EXCLUDE_STEPS = 4


@dataclass(frozen=True)
class OracleConfig:
    step: float
    newton_tol: float = 1e-12
    newton_max: int = 50

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ValidationError("oracle step must be positive")
        if not self.newton_tol > 0:
            raise ValidationError("newton_tol must be positive")
        if int(self.newton_max) != self.newton_max or self.newton_max < 1:
            raise ValidationError("newton_max must be a positive integer")
        object.__setattr__(self, "newton_max", int(self.newton_max))

    def delay_offset(self, h: float) -> int:
        """Number of grid steps per delay; validates divisibility and step <= h/8."""
        m = round(h / self.step)
        if m < 1 or abs(m * self.step - h) > 1e-9 * max(1.0, h):
            raise ValidationError("h must be an integer multiple of the oracle step")
        if m < 8:
            raise ValidationError("oracle step must be at most h/8")
        return m


@dataclass(frozen=True)
class ResidualReport:
    """Pointwise residuals of the discretized equation at the positive nodes.

    ``included`` masks out nodes within 4 steps of -h or of 0, where the
    solution may lack the smoothness the GL difference quotient assumes;
    ``max_abs`` is taken over the included nodes only.
    """

    ts: np.ndarray
    residuals: np.ndarray
    included: np.ndarray
    step: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.residuals[self.included])))


def _solve_step(spec, cfg, c, rhs_known, t_i, y_prev):
    """Solve c*y - f(t_i, y) = rhs_known for y, starting from y_prev."""
    f = spec.rhs
    y = y_prev
    for _ in range(cfg.newton_max):
        g = c * y - f(t_i, y) - rhs_known
        slope = c - f.dfdy(y)
        if abs(slope) <= 1e-12 * max(1.0, abs(c)):
            raise NewtonError(
                f"implicit step at t={t_i:.6g} has a near-singular linearization"
            )
        step = g / slope
        y -= step
        if abs(step) <= cfg.newton_tol * max(1.0, abs(y)):
            return y
    # Fixed-point fallback: y <- (f(t, y) + rhs_known) / c.
    if c == 0.0:
        raise NewtonError(f"implicit step at t={t_i:.6g} did not converge")
    for _ in range(10 * cfg.newton_max):
        y_new = (f(t_i, y) + rhs_known) / c
        if abs(y_new - y) <= cfg.newton_tol * max(1.0, abs(y_new)):
            return y_new
        y = y_new
    raise NewtonError(f"implicit step at t={t_i:.6g} did not converge")


def gl_solve(spec: ProblemSpec, cfg: OracleConfig) -> SolutionTrace:
    """March the implicit GL scheme from -h to T = l*h.

    At each positive node t_i the scheme imposes

        tau^-a sum_j w_j^(a) y_{i-j} - lam tau^-b sum_j w_j^(b) y_{i-j}
            = mu * y_{i-m} + f(t_i, y_i),

    with both sums running back to the base (j = 0..i) and m = h/tau.
    """
    tau = cfg.step
    m = cfg.delay_offset(spec.h)
    n = m * (spec.l + 1) + 1
    grid = UniformGrid(-spec.h, tau, n)
    ts = grid.nodes()

    wa = gl_weights(spec.alpha, n)
    wb = gl_weights(spec.beta, n)
    ca = tau ** (-spec.alpha)
    cb = tau ** (-spec.beta)
    c = ca - spec.lam * cb

    y = np.empty(n)
    y[: m + 1] = spec.phi(ts[: m + 1])
    for i in range(m + 1, n):
        hist = y[i - 1 :: -1]
        memory = ca * np.dot(wa[1 : i + 1], hist) - spec.lam * cb * np.dot(
            wb[1 : i + 1], hist
        )
        rhs_known = spec.mu * y[i - m] - memory
        y[i] = _solve_step(spec, cfg, c, rhs_known, ts[i], y[i - 1])
    return SolutionTrace(grid, y, {"method": "gl", "step": tau})


def residual_check(
    trace: SolutionTrace, spec: ProblemSpec, cfg: OracleConfig | None = None
) -> ResidualReport:
    """Plug a trace into the GL-discretized equation and report the residuals.

    r_i = D^a y(t_i) - lam D^b y(t_i) - mu y(t_i - h) - f(t_i, y(t_i)) at the
    nodes t_i > 0, with the GL difference quotients based at -h.
    """
    grid = trace.grid
    if abs(grid.t_start + spec.h) > 1e-9 * max(1.0, spec.h):
        raise ValidationError("residual_check needs a grid based at -h")
    tau = grid.step
    if cfg is not None and abs(cfg.step - tau) > 1e-12 * tau:
        raise ValidationError("oracle config step does not match the trace grid")
    m = round(spec.h / tau)
    if m < 1 or abs(m * tau - spec.h) > 1e-9 * max(1.0, spec.h):
        raise ValidationError("h must be an integer multiple of the trace step")

    y = trace.values
    da = gl_derivative(y, tau, spec.alpha)
    db = gl_derivative(y, tau, spec.beta)
    ts = grid.nodes()
    pos = np.nonzero(ts > 1e-12 * tau)[0]
    if pos.size == 0:
        raise ValidationError("trace has no nodes with t > 0")
    f_vals = np.array([spec.rhs(ts[i], y[i]) for i in pos])
    residuals = da[pos] - spec.lam * db[pos] - spec.mu * y[pos - m] - f_vals
    t_pos = ts[pos]
    included = (t_pos > _EXCLUDE_STEPS * tau) & (t_pos + spec.h > _EXCLUDE_STEPS * tau)
    if not included.any():
        raise ValidationError("all positive nodes fall in the excluded boundary zones")
    return ResidualReport(t_pos, residuals, included, tau)
