"""Special functions: gamma, Mittag-Leffler, generalized Wright, and the
delayed Mittag-Leffler-type functions.

Everything here is a pure function of its arguments.  All infinite series
share one truncation policy (:class:`SeriesControl`): a term is "negligible"
when it is below ``max(abs_tol * max(1, |partial|), rel_tol * |partial|)``,
and summation stops once ``consecutive_small`` successive terms are
negligible.  Terms are evaluated in log space,

    sign * exp(n*log|lam| + k*log|mu| + e*log(t - k*h)
               + log C(n+k, k) - log Gamma(e + 1)),

so that binomials and gamma factors never overflow individually.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln as _gammaln_sp, gammasgn as _gammasgn

from .errors import PoleError, SeriesConvergenceError, ValidationError

__all__ = [
    "SeriesControl",
    "WrightSpec",
    "DEFAULT_CONTROL",
    "gamma_fn",
    "recip_gamma",
    "mittag_leffler",
    "ml_kernel",
    "weight_ml",
    "wright_series",
    "g_function",
    "delayed_ml_piecewise",
    "delayed_ml_gen",
    "delayed_ml_gen_many",
]

_LOG_MAX = math.log(sys.float_info.max)  # ~709.78
_EXP_SNAP = 1e-12  # tolerance for "this float is really an integer"


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for every infinite series in the package."""

    abs_tol: float = 1e-14
    rel_tol: float = 1e-12
    max_terms: int = 10000
    consecutive_small: int = 3

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValidationError("series tolerances must be positive")
        if self.max_terms < 1 or self.consecutive_small < 1:
            raise ValidationError("max_terms and consecutive_small must be >= 1")

    def threshold(self, partial: float) -> float:
        s = abs(partial)
        return max(self.abs_tol * max(1.0, s), self.rel_tol * s)


DEFAULT_CONTROL = SeriesControl()


@dataclass(frozen=True)
class WrightSpec:
    """Parameter block of the generalized Wright series pPsi_q.

    ``upper_params`` are the (lambda_l, alpha_l) numerator pairs and
    ``lower_params`` the (b_j, beta_j) denominator pairs; the series is
    absolutely convergent when sum(beta_j) - sum(alpha_l) > -1.
    """

    upper_params: tuple[tuple[float, float], ...]
    lower_params: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "upper_params", tuple((float(a), float(b)) for a, b in self.upper_params)
        )
        object.__setattr__(
            self, "lower_params", tuple((float(a), float(b)) for a, b in self.lower_params)
        )

    @property
    def margin(self) -> float:
        return sum(b for _, b in self.lower_params) - sum(a for _, a in self.upper_params)


def _is_nonpositive_integer(x: float) -> bool:
    n = round(x)
    return n <= 0 and abs(x - n) <= _EXP_SNAP * max(1.0, abs(x))


def gamma_fn(x: float) -> float:
    """Gamma(x) for real x away from the poles at 0, -1, -2, ...

    Callers that need the reciprocal convention (1/Gamma -> 0 at the poles)
    use :func:`recip_gamma` instead; here a pole is an error.
    """
    if _is_nonpositive_integer(x):
        raise PoleError(f"gamma pole at x={x!r}")
    try:
        return math.gamma(x)
    except ValueError as exc:  # pragma: no cover - guarded above
        raise PoleError(f"gamma pole at x={x!r}") from exc
    # OverflowError (|Gamma| beyond float range) propagates as-is.


def recip_gamma(x: float) -> float:
    """1/Gamma(x) as an entire function: exactly 0 at nonpositive integers."""
    if _is_nonpositive_integer(x):
        return 0.0
    if x > 0:
        lg = math.lgamma(x)
        return math.exp(-lg) if lg < _LOG_MAX else 0.0
    # negative non-integer: |Gamma| via lgamma, sign via reflection count
    return _gammasgn(x) * math.exp(-math.lgamma(x))


def mittag_leffler(a: float, b: float, z: float, ctrl: SeriesControl | None = None) -> float:
    """Two-parameter Mittag-Leffler function E_{a,b}(z) = sum z^k / Gamma(ak+b)."""
    ctrl = DEFAULT_CONTROL if ctrl is None else ctrl
    if not (a > 0 and b > 0):
        raise ValidationError("mittag_leffler requires a > 0 and b > 0")
    if z == 0.0:
        return recip_gamma(b)
    log_z = math.log(abs(z))
    negative = z < 0
    total = 0.0
    quiet = 0
    for k in range(ctrl.max_terms):
        logmag = k * log_z - math.lgamma(a * k + b)
        if logmag > _LOG_MAX:
            raise OverflowError(f"mittag_leffler term overflow at k={k}")
        term = math.exp(logmag)
        if negative and k % 2:
            term = -term
        total += term
        if abs(term) < ctrl.threshold(total):
            quiet += 1
            if quiet >= ctrl.consecutive_small:
                return total
        else:
            quiet = 0
    raise SeriesConvergenceError(
        f"mittag_leffler(a={a}, b={b}, z={z}) did not converge in {ctrl.max_terms} terms"
    )


def ml_kernel(a: float, b: float, lam: float, t: float, ctrl: SeriesControl | None = None) -> float:
    """Kernel e_{a,b}(lam; t) = t^{b-1} E_{a,b}(lam t^a), defined for t > 0."""
    if t <= 0:
        raise ValidationError("ml_kernel requires t > 0")
    return t ** (b - 1.0) * mittag_leffler(a, b, lam * t**a, ctrl)


def weight_ml(alpha: float, omega: float, t: float, ctrl: SeriesControl | None = None) -> float:
    """Weight E_alpha(omega; t) := E_{alpha,1}(omega t^alpha); >= 1 and nondecreasing."""
    if t < 0:
        raise ValidationError("weight_ml requires t >= 0")
    if omega <= 0:
        raise ValidationError("weight_ml requires omega > 0")
    return mittag_leffler(alpha, 1.0, omega * t**alpha, ctrl)


def wright_series(spec: WrightSpec, z: float, ctrl: SeriesControl | None = None) -> float:
    """Generalized Wright function pPsi_q(z) for real parameters.

    Terms with a denominator gamma pole contribute 0 (reciprocal convention);
    a numerator pole is an error.  Raises a validation error when the
    convergence margin condition fails.
    """
    ctrl = DEFAULT_CONTROL if ctrl is None else ctrl
    if not spec.margin > -1.0:
        raise ValidationError(
            f"wright_series divergent: margin {spec.margin} must exceed -1"
        )
    log_z = math.log(abs(z)) if z != 0.0 else None
    total = 0.0
    quiet = 0
    for k in range(ctrl.max_terms):
        sign = 1.0
        logmag = -math.lgamma(k + 1.0)
        pole_term = False
        for lam_l, al_l in spec.upper_params:
            arg = lam_l + al_l * k
            if _is_nonpositive_integer(arg):
                raise PoleError(f"wright_series numerator pole at k={k}, argument {arg}")
            logmag += float(_gammaln_sp(arg))
            sign *= float(_gammasgn(arg))
        for b_j, be_j in spec.lower_params:
            arg = b_j + be_j * k
            if _is_nonpositive_integer(arg):
                pole_term = True
                break
            logmag -= float(_gammaln_sp(arg))
            sign *= float(_gammasgn(arg))
        if pole_term:
            term = 0.0
        else:
            if k:
                if log_z is None:
                    break  # z == 0: series terminates after k=0
                logmag += k * log_z
                if z < 0 and k % 2:
                    sign = -sign
            if logmag > _LOG_MAX:
                raise OverflowError(f"wright_series term overflow at k={k}")
            term = sign * math.exp(logmag)
        total += term
        if abs(term) < ctrl.threshold(total):
            quiet += 1
            if quiet >= ctrl.consecutive_small:
                return total
        else:
            quiet = 0
    if log_z is None:
        return total
    raise SeriesConvergenceError(f"wright_series did not converge in {ctrl.max_terms} terms")


def g_function(
    alpha: float,
    beta: float,
    lam: float,
    mu: float,
    t: float,
    ctrl: SeriesControl | None = None,
) -> float:
    """Double series G_{alpha,beta}(lam, mu; t).

    G = sum_n sum_k C(n+k,k) lam^n mu^k t^{alpha n + (alpha-beta) k}
        / Gamma(alpha n + (alpha-beta) k + alpha).
    """
    ctrl = DEFAULT_CONTROL if ctrl is None else ctrl
    if not (1.0 < alpha <= 2.0 and 0.0 < beta < 1.0 and alpha - beta > 1.0):
        raise ValidationError("g_function requires 1 < alpha <= 2, 0 < beta < 1, alpha-beta > 1")
    if t <= 0:
        raise ValidationError("g_function requires t > 0")
    log_t = math.log(t)
    log_lam = math.log(abs(lam)) if lam != 0.0 else None
    log_mu = math.log(abs(mu)) if mu != 0.0 else None
    lgamma = math.lgamma
    total = 0.0
    quiet_rows = 0
    for k in range(ctrl.max_terms):
        if k and log_mu is None:
            break
        row_peak = 0.0
        quiet = 0
        n = 0
        while True:
            if n and log_lam is None:
                break
            e = alpha * n + (alpha - beta) * k
            logmag = (
                (n * log_lam if n else 0.0)
                + (k * log_mu if k else 0.0)
                + lgamma(n + k + 1.0)
                - lgamma(n + 1.0)
                - lgamma(k + 1.0)
                + e * log_t
                - lgamma(e + alpha)
            )
            if logmag > _LOG_MAX:
                raise OverflowError(f"g_function term overflow at (n={n}, k={k})")
            term = math.exp(logmag)
            if lam < 0 and n % 2:
                term = -term
            if mu < 0 and k % 2:
                term = -term
            total += term
            mag = abs(term)
            row_peak = max(row_peak, mag)
            if mag < ctrl.threshold(total):
                quiet += 1
                if quiet >= ctrl.consecutive_small:
                    break
            else:
                quiet = 0
            n += 1
            if n > ctrl.max_terms:
                raise SeriesConvergenceError("g_function inner sum did not converge")
        if row_peak < ctrl.threshold(total):
            quiet_rows += 1
            if quiet_rows >= ctrl.consecutive_small:
                return total
        else:
            quiet_rows = 0
    if log_mu is None:
        return total
    raise SeriesConvergenceError("g_function outer sum did not converge")


def delayed_ml_piecewise(
    h: float,
    a: float,
    b: float,
    mu: float,
    t: float,
    ctrl: SeriesControl | None = None,
) -> float:
    """Delayed Mittag-Leffler-type function of two parameters, piecewise form.

    Branches (scalar reading of the matrix notation: Theta = 0, I = 1):

    * ``0`` for t <= -h,
    * ``(h+t)^{b-1}/Gamma(b)`` for -h < t <= 0,
    * ``sum_{j=0}^{k} mu^j (t-(j-1)h)^{ja+b-1}/Gamma(ja+b)`` for
      (k-1)h < t <= kh with k >= 1.

    ``ctrl`` is accepted for interface uniformity; every branch is a finite sum.
    """
    del ctrl
    if not (h > 0 and a > 0 and b > 0):
        raise ValidationError("delayed_ml_piecewise requires h, a, b > 0")
    if t <= -h:
        return 0.0
    if t <= 0.0:
        return (h + t) ** (b - 1.0) * recip_gamma(b)
    k = max(1, math.ceil(t / h - _EXP_SNAP))
    total = 0.0
    for j in range(k + 1):
        base = t - (j - 1) * h  # > 0 throughout the active branch
        total += mu**j * base ** (j * a + b - 1.0) * recip_gamma(j * a + b)
    return total


def delayed_ml_gen(
    h: float,
    a: float,
    b: float,
    gamma: float,
    lam: float,
    mu: float,
    t: float,
    ctrl: SeriesControl | None = None,
) -> float:
    """Delayed Mittag-Leffler-type function generated by the double series

        E^{h,gamma}_{a,b}(lam, mu; t) =
            sum_n sum_k C(n+k,k) lam^n mu^k (t-kh)^{k gamma + n a + b - 1}
            / Gamma(k gamma + n a + b) * H(t - kh),

    with H the Heaviside step and H(0) = 1, so the k-sum is finite:
    0 <= k <= floor(t/h).  Returns 0 for t < 0.  A knot term with zero base
    and negative exponent makes the pointwise value infinite; that (signed)
    infinity is returned rather than raised.
    """
    ctrl = DEFAULT_CONTROL if ctrl is None else ctrl
    if not (h > 0 and a > 0 and b > 0 and gamma > 0):
        raise ValidationError("delayed_ml_gen requires h, a, b, gamma > 0")
    if t < 0.0:
        return 0.0
    log_lam = math.log(abs(lam)) if lam != 0.0 else None
    log_mu = math.log(abs(mu)) if mu != 0.0 else None
    lgamma = math.lgamma
    k_max = int(math.floor(t / h + _EXP_SNAP))
    total = 0.0
    quiet_rows = 0
    for k in range(k_max + 1):
        if k and log_mu is None:
            break
        if k > ctrl.max_terms:
            raise SeriesConvergenceError("delayed_ml_gen delay sum did not converge")
        base = t - k * h
        if base < 0.0:
            base = 0.0
        log_base = math.log(base) if base > 0.0 else None
        k_sign = -1.0 if (mu < 0 and k % 2) else 1.0
        row_peak = 0.0
        quiet = 0
        n = 0
        while True:
            if n and log_lam is None:
                break
            e = k * gamma + n * a + b - 1.0
            sign = -k_sign if (lam < 0 and n % 2) else k_sign
            if log_base is None:
                # base == 0 exactly (a knot with H(0)=1): 0^e logic.
                if e > _EXP_SNAP:
                    term = 0.0
                elif e >= -_EXP_SNAP:
                    logmag = (
                        (n * log_lam if n else 0.0)
                        + (k * log_mu if k else 0.0)
                        + lgamma(n + k + 1.0)
                        - lgamma(n + 1.0)
                        - lgamma(k + 1.0)
                        - lgamma(e + 1.0)
                    )
                    term = sign * math.exp(logmag)
                else:
                    return sign * math.inf
            else:
                logmag = (
                    (n * log_lam if n else 0.0)
                    + (k * log_mu if k else 0.0)
                    + lgamma(n + k + 1.0)
                    - lgamma(n + 1.0)
                    - lgamma(k + 1.0)
                    + e * log_base
                    - lgamma(e + 1.0)
                )
                if logmag > _LOG_MAX:
                    raise OverflowError(
                        f"delayed_ml_gen term overflow at (n={n}, k={k}, t={t})"
                    )
                term = sign * math.exp(logmag)
            total += term
            mag = abs(term)
            row_peak = max(row_peak, mag)
            if mag < ctrl.threshold(total):
                quiet += 1
                if quiet >= ctrl.consecutive_small:
                    break
            else:
                quiet = 0
            n += 1
            if n > ctrl.max_terms:
                raise SeriesConvergenceError(
                    f"delayed_ml_gen inner sum did not converge (k={k}, t={t})"
                )
        if row_peak < ctrl.threshold(total):
            quiet_rows += 1
            if quiet_rows >= ctrl.consecutive_small:
                break
        else:
            quiet_rows = 0
    return total


def delayed_ml_gen_many(
    h: float,
    a: float,
    b: float,
    gamma: float,
    lam: float,
    mu: float,
    ts,
    ctrl: SeriesControl | None = None,
):
    """Vectorized ``delayed_ml_gen`` for an array of evaluation points.

    The truncation length of each k-row is fixed by running the scalar stop
    rule at the point where the row's terms are largest, then all points are
    filled with one vectorized pass, so agreement with the scalar function is
    within series tolerance.  Points at (or below) a knot t = k*h fall back
    to the scalar code path, which handles the 0^e cases.
    """
    ctrl = DEFAULT_CONTROL if ctrl is None else ctrl
    if not (h > 0 and a > 0 and b > 0 and gamma > 0):
        raise ValidationError("delayed_ml_gen_many requires h, a, b, gamma > 0")
    ts = np.asarray(ts, dtype=float)
    out = np.zeros(ts.shape)
    if ts.size == 0:
        return out
    flat = ts.ravel()
    res = out.ravel()
    near_knot = np.abs(flat / h - np.round(flat / h)) <= _EXP_SNAP
    vec = (flat > 0.0) & ~near_knot
    for i in np.nonzero(~vec)[0]:
        res[i] = delayed_ml_gen(h, a, b, gamma, lam, mu, float(flat[i]), ctrl)
    if not vec.any():
        return out
    tv = flat[vec]
    acc = np.zeros(tv.shape)
    log_lam = math.log(abs(lam)) if lam != 0.0 else None
    log_mu = math.log(abs(mu)) if mu != 0.0 else None
    lgamma = math.lgamma
    k_max = int(math.floor(float(tv.max()) / h + _EXP_SNAP))
    for k in range(k_max + 1):
        if k and log_mu is None:
            break
        base = tv - k * h
        act = base > 0.0
        if not act.any():
            continue
        logb = np.log(base[act])
        logb_max = float(logb.max())
        k_log = (k * log_mu if k else 0.0) - lgamma(k + 1.0)
        # Scalar probe at the dominant point fixes the truncation length.
        if log_lam is None:
            n_terms = 1
        else:
            probe_sum = 0.0
            quiet = 0
            n = 0
            while True:
                e = k * gamma + n * a + b - 1.0
                logmag = (
                    (n * log_lam if n else 0.0)
                    + k_log
                    + lgamma(n + k + 1.0)
                    - lgamma(n + 1.0)
                    + e * logb_max
                    - lgamma(e + 1.0)
                )
                if logmag > _LOG_MAX:
                    raise OverflowError(
                        f"delayed_ml_gen_many term overflow at (n={n}, k={k})"
                    )
                mag = math.exp(logmag)
                probe_sum += mag
                if mag < ctrl.threshold(probe_sum):
                    quiet += 1
                    if quiet >= ctrl.consecutive_small:
                        break
                else:
                    quiet = 0
                n += 1
                if n > ctrl.max_terms:
                    raise SeriesConvergenceError(
                        f"delayed_ml_gen_many inner sum did not converge (k={k})"
                    )
            n_terms = n + 1
        ns = np.arange(n_terms, dtype=float)
        es = k * gamma + ns * a + (b - 1.0)
        coef = k_log + _gammaln_sp(ns + k + 1.0) - _gammaln_sp(ns + 1.0) - _gammaln_sp(es + 1.0)
        if log_lam is not None:
            coef += ns * log_lam
        signs = np.ones(n_terms)
        if lam < 0:
            signs[1::2] = -1.0
        if mu < 0 and k % 2:
            signs = -signs
        logmat = coef[:, None] + es[:, None] * logb[None, :]
        acc[act] += (signs[:, None] * np.exp(logmat)).sum(axis=0)
    res[vec] = acc
    return out
