import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest

from common import db_to_linear
from common.analytic import ANALYSED_KINDS
from common.analytic import AnalyticResult
from common.analytic import EvalMethod
from common.analytic import asymptotic_from_pdf_expansion
from common.analytic import ber_asymptotic
from common.analytic import ber_d_rs_nc_asymptotic
from common.analytic import ber_d_rs_nc_exact
from common.analytic import ber_exact
from common.analytic import ber_nc_no_rs_asymptotic
from common.analytic import ber_nc_no_rs_exact
from common.analytic import ber_oracle
from common.analytic import ber_rs_no_nc_asymptotic
from common.analytic import ber_rs_no_nc_exact
from common.analytic import ber_s_rs_nc_asymptotic
from common.analytic import ber_s_rs_nc_exact
from common.analytic import cdf_link_snr
from common.analytic import cdf_max_min_snr
from common.analytic import cdf_mrc_snr
from common.analytic import digits_lost
from common.analytic import dual_sum_terms
from common.analytic import expected_q_cdf_integral
from common.analytic import gain_d_over_s
from common.analytic import gain_s_over_nc
from common.analytic import mgf_z
from common.analytic import mgf_z_partial_fractions
from common.analytic import pdf_expansion_from_cdf
from common.analytic import psi0
from common.analytic import spacing_rate
from common.analytic import table1_gain
from common.channel import RngStream
from common.channel import complex_normal
from common.selection import StrategyKind

SINGLE_RELAY_BER_AT_0DB = 0.5 * (1.0 - math.sqrt(0.5))


def test_s_rs_nc_worked_example():
    result = ber_s_rs_nc_exact(1, 2.0)
    assert result.value == pytest.approx(0.07322330470336313, rel=1e-12)
    assert result.method == EvalMethod.ALTERNATING_SUM


def test_s_rs_nc_limits():
    assert ber_s_rs_nc_exact(1, 1e-8).value == pytest.approx(0.25, abs=1e-3)
    assert ber_s_rs_nc_exact(2, 1e8).value < 1e-15


def test_s_rs_nc_approaches_asymptote():
    ratio = ber_s_rs_nc_exact(3, 1000.0).value / ber_s_rs_nc_asymptotic(3, 1000.0)
    assert ratio == pytest.approx(1.0, rel=0.05)
    ratio = ber_s_rs_nc_exact(2, 1e4).value / ber_s_rs_nc_asymptotic(2, 1e4)
    assert ratio == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("kind", ANALYSED_KINDS)
@pytest.mark.parametrize("n", [1, 2, 5])
def test_asymptote_scales_with_diversity(kind, n):
    ratio = ber_asymptotic(kind, n, 50.0) / ber_asymptotic(kind, n, 100.0)
    assert ratio == pytest.approx(2.0**n, rel=1e-12)


def test_d_rs_nc_single_relay():
    assert ber_d_rs_nc_exact(1, 1.0).value == pytest.approx(
        SINGLE_RELAY_BER_AT_0DB, rel=1e-12
    )


def test_d_rs_nc_matches_oracle():
    exact = ber_d_rs_nc_exact(2, 10.0).value
    assert exact == pytest.approx(ber_oracle(StrategyKind.DOUBLE_MAX, 2, 10.0), rel=1e-8)


def test_d_rs_nc_approaches_asymptote():
    ratio = ber_d_rs_nc_exact(2, 1000.0).value / ber_d_rs_nc_asymptotic(2, 1000.0)
    assert ratio == pytest.approx(1.0, rel=0.05)


def test_single_gain_over_all_relays():
    assert gain_s_over_nc(1) == pytest.approx(1.0)
    assert gain_s_over_nc(2) == pytest.approx(1.0)
    assert gain_s_over_nc(3) == pytest.approx(32 / 36)
    for n in range(1, 17):
        assert gain_s_over_nc(n) == table1_gain(StrategyKind.MIN_MAX_SINGLE, n)


def test_dual_gain_over_single():
    for n in range(1, 17):
        ratio = ber_d_rs_nc_asymptotic(n, 100.0) / ber_s_rs_nc_asymptotic(n, 100.0)
        assert ratio == pytest.approx(gain_d_over_s(n), rel=1e-12)
    assert gain_d_over_s(1) == pytest.approx(1.0)
    assert all(gain_d_over_s(n) < 1 for n in range(2, 17))


def test_nc_no_rs_examples():
    assert ber_nc_no_rs_exact(1, 1.0).value == pytest.approx(0.1464466, rel=1e-6)
    assert ber_nc_no_rs_exact(3, 1e-8).value == pytest.approx(0.5, abs=1e-3)
    ratio = ber_nc_no_rs_exact(4, 1000.0).value / ber_nc_no_rs_asymptotic(4, 1000.0)
    assert ratio == pytest.approx(1.0, rel=0.05)


def test_rs_no_nc_examples():
    assert ber_rs_no_nc_exact(1, 2.0).value == pytest.approx(
        SINGLE_RELAY_BER_AT_0DB, rel=1e-12
    )
    for n in (1, 3, 6):
        assert ber_rs_no_nc_exact(n, 10.0).value == pytest.approx(
            2.0 * ber_s_rs_nc_exact(n, 10.0).value, rel=1e-12
        )
        assert ber_s_rs_nc_asymptotic(n, 10.0) / ber_rs_no_nc_asymptotic(
            n, 10.0
        ) == pytest.approx(0.5, rel=1e-12)


def test_table1_values():
    row = [
        table1_gain(kind, 2)
        for kind in (
            StrategyKind.MIN_MAX_SINGLE,
            StrategyKind.DOUBLE_MAX,
            StrategyKind.DOUBLE_MAX_NO_NC,
        )
    ]
    np.testing.assert_allclose(row, [1.0, 0.75, 2.0], rtol=1e-12)
    assert table1_gain(StrategyKind.DOUBLE_MAX, 4) == pytest.approx(90 / 256)
    assert table1_gain(StrategyKind.DOUBLE_MAX_NO_NC, 6) == pytest.approx(
        0.98765, abs=1e-5
    )
    assert table1_gain(StrategyKind.ALL_RELAYS_NC, 9) == 1.0
    with pytest.raises(ValueError):
        table1_gain(StrategyKind.OPTIMAL_DUAL, 2)


def test_table1_matches_asymptotic_ratio():
    for kind in ANALYSED_KINDS:
        for n in (2, 5, 11):
            ratio = ber_asymptotic(kind, n, 30.0) / ber_nc_no_rs_asymptotic(n, 30.0)
            assert ratio == pytest.approx(table1_gain(kind, n), rel=1e-10)


def test_expected_q_of_exponential():
    value = expected_q_cdf_integral(lambda x: cdf_link_snr(x, 1.0), 2.0)
    assert value == pytest.approx(SINGLE_RELAY_BER_AT_0DB, rel=1e-9)
    with pytest.raises(ValueError):
        expected_q_cdf_integral(lambda x: cdf_link_snr(x, 1.0), 0.0)


@pytest.mark.parametrize("n", [1, 2, 4, 7])
def test_generic_asymptote_reproduces_single_relay_form(n):
    a, order = pdf_expansion_from_cdf(2.0**n, n)
    assert order == n - 1
    generic = 0.5 * asymptotic_from_pdf_expansion(a, order, 2.0, 100.0)
    assert generic == pytest.approx(ber_s_rs_nc_asymptotic(n, 100.0), rel=1e-12)


def test_generic_asymptote_rejects_bad_expansion():
    with pytest.raises(ValueError):
        pdf_expansion_from_cdf(1.0, 0)
    with pytest.raises(ValueError):
        asymptotic_from_pdf_expansion(-1.0, 1, 2.0, 10.0)


def psi0_by_quadrature(c1, c2):
    value, _ = quad(
        lambda t: math.sin(t) ** 4 / ((c1 + math.sin(t) ** 2) * (c2 + math.sin(t) ** 2)),
        0.0,
        math.pi / 2,
        epsabs=0.0,
        epsrel=1e-12,
    )
    return value / math.pi


@pytest.mark.parametrize(
    "c1, c2", [(0.5, 2.0), (10.0, 2.5), (100.0, 0.1), (3.0, 3.0), (1e3, 4e3)]
)
def test_psi0_matches_quadrature(c1, c2):
    assert psi0(c1, c2) == pytest.approx(psi0_by_quadrature(c1, c2), rel=1e-10)


def test_psi0_near_equal_arguments():
    c = 7.0
    assert psi0(c, c * (1 + 1e-9)) == pytest.approx(psi0(c, c), rel=1e-9)
    assert psi0(c, c * (1 + 1e-5)) == pytest.approx(psi0(c, c), rel=2e-5)
    assert psi0(c, c * (1 + 1e-5)) == pytest.approx(
        psi0_by_quadrature(c, c * (1 + 1e-5)), rel=1e-10
    )


def test_psi0_limits_and_symmetry():
    assert psi0(1e-12, 1e-12) == pytest.approx(0.5, rel=1e-5)
    assert psi0(1e8, 1e8) < 1e-15
    assert psi0(2.0, 9.0) == pytest.approx(psi0(9.0, 2.0), rel=1e-14)
    with pytest.raises(ValueError):
        psi0(0.0, 1.0)


def test_dual_sum_term_count():
    assert len(list(dual_sum_terms(1, 10.0))) == 0
    terms = list(dual_sum_terms(3, 10.0))
    assert len(terms) == 4
    assert {(t.q, t.k, t.p) for t in terms} == {
        (1, 1, 2),
        (1, 1, 3),
        (2, 1, 3),
        (2, 2, 3),
    }
    assert all(t.c1 == 10.0 / (3 - t.k + 1) for t in terms)


def test_mgf_at_origin():
    assert mgf_z(0.0, 4, 2, 10.0) == pytest.approx(1.0)
    assert mgf_z_partial_fractions(0.0, 4, 2, 10.0) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("n, q", [(2, 1), (3, 1), (4, 2), (6, 5)])
def test_mgf_partial_fractions_match_product(n, q):
    for s in (-1.0, -0.01, 0.005):
        assert mgf_z_partial_fractions(s, n, q, 10.0) == pytest.approx(
            mgf_z(s, n, q, 10.0), rel=1e-9
        )


def test_mgf_guards():
    with pytest.raises(ValueError):
        mgf_z(0.1, 4, 2, 10.0)
    with pytest.raises(ValueError):
        mgf_z(-1.0, 4, 0, 10.0)
    with pytest.raises(ValueError):
        mgf_z_partial_fractions(-1.0, 4, 4, 10.0)


def test_mgf_two_relays_against_samples():
    # Z is the sum of both link SNRs when N = 2
    gamma_rd, s = 1.0, -0.5
    rng = np.random.default_rng(1)
    z = rng.exponential(gamma_rd, size=(100_000, 2)).sum(axis=-1)
    expected = (1.0 - s * gamma_rd) ** -2
    assert mgf_z(s, 2, 1, gamma_rd) == pytest.approx(expected, rel=1e-12)
    assert np.mean(np.exp(s * z)) == pytest.approx(expected, abs=0.005)


@pytest.mark.parametrize("kind", ANALYSED_KINDS)
@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("gamma_rd", [0.1, 1.0, 10.0, 100.0, 1000.0])
def test_closed_form_matches_oracle(kind, n, gamma_rd):
    assert ber_exact(kind, n, gamma_rd).value == pytest.approx(
        ber_oracle(kind, n, gamma_rd), rel=1e-8
    )


@pytest.mark.parametrize("kind", ANALYSED_KINDS)
@pytest.mark.parametrize("n", [2, 3, 4])
def test_diversity_order(kind, n):
    low = ber_exact(kind, n, db_to_linear(30.0), force_quadrature=True).value
    high = ber_exact(kind, n, db_to_linear(40.0), force_quadrature=True).value
    assert math.log10(high / low) == pytest.approx(-n, abs=0.05)


@pytest.mark.parametrize("kind", ANALYSED_KINDS)
def test_ber_decreases_with_snr_and_relays(kind):
    grid = [db_to_linear(snr_db) for snr_db in range(0, 31, 5)]
    table = np.array(
        [[ber_exact(kind, n, gamma_rd).value for gamma_rd in grid] for n in range(1, 5)]
    )
    assert np.all(np.diff(table, axis=1) < 0)
    assert np.all(np.diff(table, axis=0) < 0)


def test_switches_to_quadrature_on_cancellation():
    result = ber_s_rs_nc_exact(16, 1000.0)
    assert result.method == EvalMethod.QUADRATURE
    assert result.est_cancellation_loss > 6
    assert result.value == pytest.approx(ber_s_rs_nc_asymptotic(16, 1000.0), rel=0.5)
    assert ber_s_rs_nc_exact(1, 1.0).method == EvalMethod.ALTERNATING_SUM


@pytest.mark.parametrize("kind", ANALYSED_KINDS)
def test_forced_quadrature_agrees_with_closed_form(kind):
    closed = ber_exact(kind, 3, 10.0)
    forced = ber_exact(kind, 3, 10.0, force_quadrature=True)
    assert closed.method == EvalMethod.ALTERNATING_SUM
    assert forced.method == EvalMethod.QUADRATURE
    assert forced.value == pytest.approx(closed.value, rel=1e-9)


def test_digits_lost():
    assert digits_lost([0.5, 0.25]) == (0.75, 0.0)
    assert digits_lost([1.0, -1.0])[1] == 17.0
    _, loss = digits_lost([1.0, -0.999])
    assert loss == pytest.approx(math.log10(1.999 / 0.001))


def test_spacing_rate():
    assert spacing_rate(1, 4, 2.0) == 2.0
    assert spacing_rate(4, 4, 2.0) == 0.5
    with pytest.raises(ValueError):
        spacing_rate(0, 4, 2.0)


def test_ks_max_min_law():
    n, gamma_rd = 3, 10.0
    rng = RngStream(2010, 21).generator()
    snrs = gamma_rd * np.abs(complex_normal(rng, (1_000_000, n, 2))) ** 2
    samples = snrs.min(axis=-1).max(axis=-1)
    assert kstest(samples, lambda x: cdf_max_min_snr(x, n, gamma_rd)).statistic < 0.002


def test_ks_mrc_law():
    n, gamma_rd = 4, 10.0
    rng = RngStream(2010, 22).generator()
    samples = gamma_rd / n * np.sum(np.abs(complex_normal(rng, (1_000_000, n))) ** 2, axis=-1)
    assert kstest(samples, lambda x: cdf_mrc_snr(x, n, gamma_rd)).statistic < 0.002


def test_result_validation():
    with pytest.raises(ValueError):
        AnalyticResult(0.6, EvalMethod.ALTERNATING_SUM)
    with pytest.raises(ValueError):
        AnalyticResult(0.1, EvalMethod.QUADRATURE, -1.0)


@pytest.mark.parametrize("n, gamma_rd", [(0, 1.0), (2, 0.0), (2, math.inf), (1.5, 1.0)])
def test_invalid_inputs(n, gamma_rd):
    with pytest.raises(ValueError):
        ber_s_rs_nc_exact(n, gamma_rd)


def test_no_closed_form_for_optimal_baselines():
    with pytest.raises(ValueError):
        ber_exact(StrategyKind.OPTIMAL_DUAL, 2, 10.0)
    with pytest.raises(ValueError):
        ber_asymptotic(StrategyKind.OPTIMAL_SUBSET, 2, 10.0)
    with pytest.raises(ValueError):
        ber_oracle(StrategyKind.OPTIMAL_SINGLE, 2, 10.0)


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_ks_order_statistic_spacings(level):
    n, gamma_rd = 4, 10.0
    rng = RngStream(2010, 23).generator()
    snrs = gamma_rd * np.abs(complex_normal(rng, (500_000, n))) ** 2
    spacings = np.diff(np.sort(snrs, axis=-1), axis=-1, prepend=0.0)
    rate = spacing_rate(level, n, gamma_rd)
    result = kstest(
        spacings[:, level - 1], lambda x: -np.expm1(-rate * np.maximum(x, 0.0))
    )
    assert result.statistic < 0.003
