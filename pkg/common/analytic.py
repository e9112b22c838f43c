"""
Closed-form and asymptotic average sum BER of the analysed schemes, with the
integral representations used when a closed form is ill-conditioned and an
independent Craig/MGF evaluation of every scheme.

Alternating binomial sums lose digits to cancellation as N and gamma_rd grow.
Each closed form reports the loss it suffered, measured a posteriori as
log10(sum |terms| / |sum|); past ``MAX_DIGITS_LOST`` the evaluation switches
to a sign-definite integral.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad
from scipy.special import erfcx
from scipy.special import gammainc
from scipy.special import gammaln

from common.selection import StrategyKind

MAX_DIGITS_LOST = 6.0
TOTAL_LOSS = 17.0
NEAR_EQUAL_RTOL = 1e-6
QUAD_EPSREL = 1e-11
QUAD_LIMIT = 200
QUAD_WARN_RTOL = 1e-8
QUAD_FAIL_RTOL = 1e-3
# exp(-745) underflows to zero in double precision
EXP_UNDERFLOW = 745.0
LOG_SQRT_PI = 0.5 * math.log(math.pi)

ANALYSED_KINDS = (
    StrategyKind.MIN_MAX_SINGLE,
    StrategyKind.DOUBLE_MAX,
    StrategyKind.ALL_RELAYS_NC,
    StrategyKind.DOUBLE_MAX_NO_NC,
)


class ConvergenceError(ArithmeticError):
    pass


class EvalMethod(Enum):
    ALTERNATING_SUM = "alternating_sum"
    QUADRATURE = "quadrature"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class AnalyticResult:
    value: float
    method: EvalMethod
    est_cancellation_loss: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.value <= 0.5:
            raise ValueError(f"BER must lie in [0, 0.5], got {self.value}")
        if self.est_cancellation_loss < 0:
            raise ValueError("digit loss cannot be negative")


@dataclass(frozen=True)
class DualSumTerms:
    n: int
    q: int
    k: int
    p: int
    c1: float
    c2: float
    psi0: float
    sigma0: int
    contribution: float
    magnitude: float


def _check_inputs(n, gamma_rd):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if not (gamma_rd > 0 and math.isfinite(gamma_rd)):
        raise ValueError(f"gamma_rd must be positive and finite, got {gamma_rd}")
    return int(n), float(gamma_rd)


def log_binomial(n, p):
    return gammaln(n + 1) - gammaln(p + 1) - gammaln(n - p + 1)


def digits_lost(terms):
    """A posteriori cancellation loss of ``math.fsum(terms)`` in decimal digits."""
    total = math.fsum(terms)
    if total <= 0:
        return total, TOTAL_LOSS
    magnitude = math.fsum(abs(t) for t in terms)
    return total, max(0.0, math.log10(magnitude / total))


def _clamp(value):
    return min(max(value, 0.0), 0.5)


def _binomial_terms(n, scale, ratio):
    """scale * (-1)^p C(n, p) (1 + p * ratio)^(-1/2) for p = 0..n."""
    return [
        (-1) ** p * scale * math.exp(log_binomial(n, p) - 0.5 * math.log1p(p * ratio))
        for p in range(n + 1)
    ]


def _quad(integrand, lower, upper, label):
    result = quad(
        integrand, lower, upper, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT,
        full_output=1,
    )
    value, abserr = result[0], result[1]
    if not math.isfinite(value) or (
        value != 0 and abserr > QUAD_FAIL_RTOL * abs(value)
    ):
        raise ConvergenceError(
            f"Quadrature for {label} failed: value={value}, error={abserr}"
        )
    if value != 0 and abserr > QUAD_WARN_RTOL * abs(value):
        message = result[3] if len(result) > 3 else ""
        logging.warning(
            f"Quadrature for {label} reached only {abserr / abs(value):.1e} "
            f"relative accuracy {message}".rstrip()
        )
    logging.debug(f"Quadrature {label}: {value:.6e} +/- {abserr:.1e}")
    return value


# Distribution laws


def cdf_link_snr(x, gamma_rd):
    """CDF of gamma_rd |h|^2, exponential with mean gamma_rd."""
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return -np.expm1(-x / gamma_rd)


def cdf_min_link_snr(x, gamma_rd):
    """min of the two downlink SNRs of one relay, exponential with mean gamma_rd / 2."""
    return cdf_link_snr(x, gamma_rd / 2.0)


def cdf_max_min_snr(x, n, gamma_rd):
    return cdf_min_link_snr(x, gamma_rd) ** n


def cdf_max_link_snr(x, n, gamma_rd):
    return cdf_link_snr(x, gamma_rd) ** n


def cdf_mrc_snr(x, n, gamma_rd):
    """(gamma_rd / n) times a sum of n unit exponentials."""
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return gammainc(n, n * x / gamma_rd)


def spacing_rate(level, n, gamma_rd):
    """
    Rate of the spacing between the (level-1)-th and level-th smallest of n
    exponential link SNRs with mean gamma_rd.
    """
    if not 1 <= level <= n:
        raise ValueError(f"level must lie in [1, {n}], got {level}")
    return (n - level + 1) / gamma_rd


# Integral representations


def expected_q_cdf_integral(cdf, b):
    """
    E[Q(sqrt(b X))] for a non-negative X with CDF ``cdf``, written after
    integration by parts as sqrt(b / (2 pi)) * int_0^inf exp(-b t^2 / 2) F(t^2) dt
    with x = t^2.
    """
    if not b > 0:
        raise ValueError(f"b must be positive, got {b}")
    upper = math.sqrt(2.0 * EXP_UNDERFLOW / b)

    def integrand(t):
        return math.exp(-0.5 * b * t * t) * float(cdf(t * t))

    return math.sqrt(b / (2.0 * math.pi)) * _quad(integrand, 0.0, upper, "E[Q]")


def _s_rs_nc_integral(n, gamma_rd):
    return 0.5 * expected_q_cdf_integral(lambda x: cdf_max_min_snr(x, n, gamma_rd), 2.0)


def _rs_no_nc_integral(n, gamma_rd):
    return expected_q_cdf_integral(lambda x: cdf_max_link_snr(x, n, gamma_rd), 1.0)


def _nc_no_rs_integral(n, gamma_rd):
    return expected_q_cdf_integral(lambda x: cdf_mrc_snr(x, n, gamma_rd), 2.0)


def _partner_q_integral(y, gamma_rd):
    """int_0^y f(x) Q(sqrt(x + y)) dx for the exponential density f with mean gamma_rd."""
    a = 0.5 + 1.0 / gamma_rd
    q_y = 0.5 * math.erfc(math.sqrt(y / 2.0))
    q_2y = 0.5 * math.erfc(math.sqrt(y))
    tail = (
        erfcx(math.sqrt(a * y)) * math.exp(-0.5 * y)
        - erfcx(math.sqrt(2.0 * a * y)) * math.exp(-y * (1.0 + 1.0 / gamma_rd))
    ) / (2.0 * math.sqrt(2.0 * a))
    return q_y - math.exp(-y / gamma_rd) * q_2y - tail


def _d_rs_nc_integral(n, gamma_rd):
    """
    Condition on the strongest link to a user (L1 when the partner relay is
    the same relay) and on the partner's link drawn from the N-1 others (L2).
    """
    l1 = expected_q_cdf_integral(lambda x: cdf_max_link_snr(x, n, gamma_rd), 2.0) / n
    if n == 1:
        return l1
    upper = math.sqrt(2.0 * EXP_UNDERFLOW)

    def integrand(t):
        y = t * t
        tail = math.exp(-y / gamma_rd)
        density = tail / gamma_rd
        return 2.0 * t * (-math.expm1(-y / gamma_rd)) ** (n - 2) * density * (
            _partner_q_integral(y, gamma_rd)
        )

    l2 = (n - 1) * _quad(integrand, 0.0, upper, f"D-RS-NC partner term N={n}")
    return l1 + l2


# Psi_0 and the dual-relay sum


def _r(c):
    return -c / (math.sqrt(1.0 + c) * (math.sqrt(c) + math.sqrt(1.0 + c)))


def _psi0_equal(c):
    root = math.sqrt(1.0 + c)
    return (4.0 + 3.0 * c) / (
        4.0 * root**3 * (2.0 * root**3 + math.sqrt(c) * (3.0 + 2.0 * c))
    )


def _psi0_with_magnitude(c1, c2):
    if not (c1 > 0 and c2 > 0):
        raise ValueError(f"psi0 needs positive arguments, got ({c1}, {c2})")
    delta = c2 - c1
    if abs(delta) < NEAR_EQUAL_RTOL * max(c1, c2):
        slope = 3.0 / (16.0 * math.sqrt(c1) * (1.0 + c1) ** 2.5)
        value = _psi0_equal(c1) - slope * delta
        return value, abs(value)
    r1 = _r(c1)
    r2 = _r(c2)
    return -0.5 * (r2 - r1) / delta, 0.5 * (abs(r1) + abs(r2)) / abs(delta)


def psi0(c1, c2):
    """(1/pi) int_0^{pi/2} sin^4 / ((c1 + sin^2)(c2 + sin^2)) d theta."""
    return _psi0_with_magnitude(c1, c2)[0]


def _sigma0(n, q, k, p):
    first = math.prod(j - k for j in range(1, q + 1) if j != k)
    second = math.prod(m - p for m in range(q + 1, n + 1) if m != p)
    return first * second * (n - p + 1) * (n - k + 1)


def dual_sum_terms(n, gamma_rd):
    n, gamma_rd = _check_inputs(n, gamma_rd)
    sign = -1 if n % 2 else 1
    factorial = math.factorial(n - 1)
    for q in range(1, n):
        for k in range(1, q + 1):
            for p in range(q + 1, n + 1):
                c1 = gamma_rd / (n - k + 1)
                c2 = gamma_rd / (2.0 * (n - p + 1))
                value, magnitude = _psi0_with_magnitude(c1, c2)
                sigma0 = _sigma0(n, q, k, p)
                weight = sign * factorial / sigma0
                yield DualSumTerms(
                    n=n, q=q, k=k, p=p, c1=c1, c2=c2, psi0=value, sigma0=sigma0,
                    contribution=weight * value, magnitude=abs(weight) * magnitude,
                )


def _d_rs_nc_closed(n, gamma_rd):
    l1_terms = _binomial_terms(n, 1.0 / (2.0 * n), 1.0 / gamma_rd)
    terms = list(dual_sum_terms(n, gamma_rd))
    contributions = l1_terms + [t.contribution for t in terms]
    total = math.fsum(contributions)
    if total <= 0:
        return total, TOTAL_LOSS
    magnitude = math.fsum(abs(t) for t in l1_terms) + math.fsum(
        t.magnitude for t in terms
    )
    return total, max(0.0, math.log10(magnitude / total))


# Exact BER


def _evaluate(label, closed, integral, n, gamma_rd, force_quadrature):
    n, gamma_rd = _check_inputs(n, gamma_rd)
    value, loss = closed(n, gamma_rd)
    if force_quadrature or loss > MAX_DIGITS_LOST:
        logging.debug(
            f"{label} N={n} gamma={gamma_rd:g}: closed form loses {loss:.1f} digits, "
            f"using quadrature"
        )
        return AnalyticResult(
            _clamp(integral(n, gamma_rd)), EvalMethod.QUADRATURE, loss
        )
    return AnalyticResult(_clamp(value), EvalMethod.ALTERNATING_SUM, loss)


def _s_rs_nc_closed(n, gamma_rd):
    return digits_lost(_binomial_terms(n, 0.25, 2.0 / gamma_rd))


def _rs_no_nc_closed(n, gamma_rd):
    return digits_lost(_binomial_terms(n, 0.5, 2.0 / gamma_rd))


def _nc_no_rs_closed(n, gamma_rd):
    ratio = n / gamma_rd
    terms = [0.5] + [
        -math.exp(
            p * math.log(ratio)
            + gammaln(p + 0.5)
            - gammaln(p + 1)
            - (p + 0.5) * math.log1p(ratio)
            - math.log(2.0)
            - LOG_SQRT_PI
        )
        for p in range(n)
    ]
    return digits_lost(terms)


def ber_s_rs_nc_exact(n, gamma_rd, force_quadrature=False):
    """Worst-user approximation of the Min-Max single relay scheme."""
    return _evaluate(
        "S-RS-NC", _s_rs_nc_closed, _s_rs_nc_integral, n, gamma_rd, force_quadrature
    )


def ber_d_rs_nc_exact(n, gamma_rd, force_quadrature=False):
    return _evaluate(
        "D-RS-NC", _d_rs_nc_closed, _d_rs_nc_integral, n, gamma_rd, force_quadrature
    )


def ber_nc_no_rs_exact(n, gamma_rd, force_quadrature=False):
    return _evaluate(
        "NC-No-RS", _nc_no_rs_closed, _nc_no_rs_integral, n, gamma_rd, force_quadrature
    )


def ber_rs_no_nc_exact(n, gamma_rd, force_quadrature=False):
    return _evaluate(
        "RS-No-NC", _rs_no_nc_closed, _rs_no_nc_integral, n, gamma_rd, force_quadrature
    )


# Asymptotics


def _log_gamma_term(n, gamma_rd):
    return gammaln(n + 0.5) - LOG_SQRT_PI - n * math.log(gamma_rd)


def ber_s_rs_nc_asymptotic(n, gamma_rd):
    n, gamma_rd = _check_inputs(n, gamma_rd)
    return math.exp((n - 2) * math.log(2.0) + _log_gamma_term(n, gamma_rd))


def ber_d_rs_nc_asymptotic(n, gamma_rd):
    n, gamma_rd = _check_inputs(n, gamma_rd)
    log_coefficient = n * math.log(2.0) + math.log1p(-(2.0**-n)) - math.log(2.0 * n)
    return math.exp(log_coefficient + _log_gamma_term(n, gamma_rd))


def ber_nc_no_rs_asymptotic(n, gamma_rd):
    n, gamma_rd = _check_inputs(n, gamma_rd)
    log_coefficient = n * math.log(n) - math.log(2.0) - gammaln(n + 1)
    return math.exp(log_coefficient + _log_gamma_term(n, gamma_rd))


def ber_rs_no_nc_asymptotic(n, gamma_rd):
    n, gamma_rd = _check_inputs(n, gamma_rd)
    return math.exp((n - 1) * math.log(2.0) + _log_gamma_term(n, gamma_rd))


def pdf_expansion_from_cdf(coefficient, order):
    """CDF ~ a x^N near zero gives PDF ~ N a x^(N-1); returns (N a, N - 1)."""
    if order < 1:
        raise ValueError(f"CDF expansion order must be at least 1, got {order}")
    return order * coefficient, order - 1


def asymptotic_from_pdf_expansion(a, n_order, b, gamma):
    """
    High-SNR E[Q(sqrt(b X))] when the PDF of X behaves as a x^N / gamma^(N+1)
    near the origin.
    """
    if not (a > 0 and b > 0 and gamma > 0) or n_order < 0:
        raise ValueError(f"invalid expansion a={a}, N={n_order}, b={b}, gamma={gamma}")
    log_value = (
        n_order * math.log(2.0)
        + math.log(a)
        + gammaln(n_order + 1.5)
        - LOG_SQRT_PI
        - math.log(n_order + 1)
        - (n_order + 1) * math.log(b * gamma)
    )
    return math.exp(log_value)


# Gains


def table1_gain(scheme, n):
    """High-SNR BER of ``scheme`` relative to NC-No-RS at the same N."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    log_base = gammaln(n + 1) - n * math.log(n)
    if scheme == StrategyKind.MIN_MAX_SINGLE:
        return math.exp(log_base + (n - 1) * math.log(2.0))
    elif scheme == StrategyKind.DOUBLE_MAX:
        return math.exp(
            log_base - math.log(n) + n * math.log(2.0) + math.log1p(-(2.0**-n))
        )
    elif scheme == StrategyKind.DOUBLE_MAX_NO_NC:
        return math.exp(log_base + n * math.log(2.0))
    elif scheme == StrategyKind.ALL_RELAYS_NC:
        return 1.0
    raise ValueError(f"No gain-table entry for scheme {scheme}")


def gain_d_over_s(n):
    return (2.0 - 2.0 ** (1 - n)) / n


def gain_s_over_nc(n):
    return table1_gain(StrategyKind.MIN_MAX_SINGLE, n)


# MGF of the dual-relay decision variable


def _mgf_rates(n, q, gamma_rd):
    if not 1 <= q <= n - 1:
        raise ValueError(f"q must lie in [1, {n - 1}], got {q}")
    lam = np.array([(n - k + 1) / gamma_rd for k in range(1, n + 1)])
    poles = np.concatenate([lam[:q] / 2.0, lam[q:]])
    return lam, poles


def _check_pole(s, poles):
    bound = float(np.min(poles))
    if s >= bound * (1.0 - 1e-9):
        raise ValueError(f"s={s} is at or beyond the pole bound {bound}")


def mgf_z(s, n, q, gamma_rd):
    """
    E[exp(s Z)] for Z = gamma_(N) + gamma_(q), twice the first q spacings plus
    the remaining ones.
    """
    n, gamma_rd = _check_inputs(n, gamma_rd)
    _, poles = _mgf_rates(n, q, gamma_rd)
    _check_pole(s, poles)
    return float(np.prod(poles / (poles - s)))


def mgf_z_partial_fractions(s, n, q, gamma_rd):
    n, gamma_rd = _check_inputs(n, gamma_rd)
    _, poles = _mgf_rates(n, q, gamma_rd)
    _check_pole(s, poles)
    total = []
    for k in range(1, q + 1):
        a_k = math.prod((n - j + 1) / (k - j) for j in range(1, q + 1) if j != k)
        for p in range(q + 1, n + 1):
            b_p = math.prod(
                (n - m + 1) / (p - m) for m in range(q + 1, n + 1) if m != p
            )
            alpha = poles[k - 1]
            beta = poles[p - 1]
            total.append(a_k * b_p * alpha / (alpha - s) * beta / (beta - s))
    return math.fsum(total)


# Craig/MGF oracles


def craig_q_average(integrand_of_sin2, label="Craig"):
    """(1/pi) int_0^{pi/2} g(sin^2 theta) d theta."""
    return _quad(
        lambda theta: integrand_of_sin2(math.sin(theta) ** 2), 0.0, math.pi / 2, label
    ) / math.pi


def _selection_product(n, gamma_rd):
    means = np.array([gamma_rd / (2.0 * k) for k in range(1, n + 1)])
    return lambda s: float(np.prod(s / (s + means)))


def _dual_oracle_integrand(n, gamma_rd):
    counts = np.arange(n, 0, -1, dtype=float)
    doubled = gamma_rd / counts
    single = gamma_rd / (2.0 * counts)

    def integrand(s):
        double_factors = s / (s + doubled)
        single_factors = s / (s + single)
        heads = np.cumprod(double_factors)
        tails = np.append(np.cumprod(single_factors[::-1])[::-1][1:], 1.0)
        return float(np.sum(heads * tails)) / n

    return integrand


def ber_oracle(kind, n, gamma_rd):
    n, gamma_rd = _check_inputs(n, gamma_rd)
    label = f"{kind.value} oracle N={n}"
    if kind == StrategyKind.MIN_MAX_SINGLE:
        return 0.5 * craig_q_average(_selection_product(n, gamma_rd), label)
    elif kind == StrategyKind.DOUBLE_MAX_NO_NC:
        return craig_q_average(_selection_product(n, gamma_rd), label)
    elif kind == StrategyKind.ALL_RELAYS_NC:
        return craig_q_average(lambda s: (s / (s + gamma_rd / n)) ** n, label)
    elif kind == StrategyKind.DOUBLE_MAX:
        return craig_q_average(_dual_oracle_integrand(n, gamma_rd), label)
    raise ValueError(f"No oracle for scheme {kind}")


# Dispatch

EXACT = {
    StrategyKind.MIN_MAX_SINGLE: ber_s_rs_nc_exact,
    StrategyKind.DOUBLE_MAX: ber_d_rs_nc_exact,
    StrategyKind.ALL_RELAYS_NC: ber_nc_no_rs_exact,
    StrategyKind.DOUBLE_MAX_NO_NC: ber_rs_no_nc_exact,
}

ASYMPTOTIC = {
    StrategyKind.MIN_MAX_SINGLE: ber_s_rs_nc_asymptotic,
    StrategyKind.DOUBLE_MAX: ber_d_rs_nc_asymptotic,
    StrategyKind.ALL_RELAYS_NC: ber_nc_no_rs_asymptotic,
    StrategyKind.DOUBLE_MAX_NO_NC: ber_rs_no_nc_asymptotic,
}


def has_closed_form(kind):
    return kind in EXACT


def ber_exact(kind, n, gamma_rd, force_quadrature=False):
    if not has_closed_form(kind):
        raise ValueError(f"No closed-form BER for scheme {kind.value}")
    return EXACT[kind](n, gamma_rd, force_quadrature=force_quadrature)


def ber_asymptotic(kind, n, gamma_rd):
    if not has_closed_form(kind):
        raise ValueError(f"No asymptotic BER for scheme {kind.value}")
    return ASYMPTOTIC[kind](n, gamma_rd)
