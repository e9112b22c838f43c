"""
Oracle suite run by ``relay_selection_nc.py validate``.

Each step checks one family of properties and returns a short summary; a
failing check raises ``ValidationFailure``.
"""
import logging
import math

import numpy as np
from scipy.stats import kstest

from common import db_to_linear
from common.analytic import ANALYSED_KINDS
from common.analytic import ber_asymptotic
from common.analytic import ber_exact
from common.analytic import ber_oracle
from common.analytic import cdf_link_snr
from common.analytic import cdf_max_min_snr
from common.analytic import cdf_min_link_snr
from common.analytic import cdf_mrc_snr
from common.analytic import gain_d_over_s
from common.analytic import spacing_rate
from common.analytic import table1_gain
from common.channel import ChannelRealization
from common.channel import RngStream
from common.channel import SnrConfig
from common.channel import complex_normal
from common.montecarlo import Fidelity
from common.montecarlo import TrialConfig
from common.montecarlo import estimate_ber
from common.selection import BackoffMode
from common.selection import StrategyKind
from common.selection import double_max_batch
from common.selection import min_max_batch
from common.selection import run_backoff_selection
from common.selection import run_two_step_backoff
from common.steps_runner import run_procedure

ORACLE_RTOL = 1e-8
SLOPE_TOLERANCE = 0.05
KS_LIMIT = 0.002
SIGMA_BAND = 4.0


class ValidationFailure(AssertionError):
    pass


def check(condition, message):
    if not condition:
        raise ValidationFailure(message)


def _quick(context):
    return getattr(context["args"], "quick", False)


def _seed(context):
    return getattr(context["args"], "seed", 2010)


class OracleEquivalence:
    def run(self, context):
        relays = range(1, 5) if _quick(context) else range(1, 11)
        gammas = [0.1, 1.0, 10.0, 100.0, 1000.0]
        worst = 0.0
        for kind in ANALYSED_KINDS:
            for n in relays:
                for gamma_rd in gammas:
                    exact = ber_exact(kind, n, gamma_rd).value
                    oracle = ber_oracle(kind, n, gamma_rd)
                    error = abs(exact - oracle) / oracle
                    worst = max(worst, error)
                    check(
                        error <= ORACLE_RTOL,
                        f"{kind.value} N={n} gamma={gamma_rd}: {exact} vs {oracle}",
                    )
        return f"worst relative error {worst:.1e}"


class DiversityOrder:
    def run(self, context):
        low, high = db_to_linear(30.0), db_to_linear(40.0)
        slopes = []
        for kind in ANALYSED_KINDS:
            for n in (2, 3, 4):
                ber_low = ber_exact(kind, n, low, force_quadrature=True).value
                ber_high = ber_exact(kind, n, high, force_quadrature=True).value
                slope = math.log10(ber_high / ber_low)
                slopes.append(slope + n)
                check(
                    abs(slope + n) <= SLOPE_TOLERANCE,
                    f"{kind.value} N={n}: slope {slope:.3f}",
                )
        return f"largest slope deviation {max(abs(s) for s in slopes):.3f}"


class GainIdentities:
    def run(self, context):
        for n in range(1, 17):
            ratio = ber_asymptotic(StrategyKind.MIN_MAX_SINGLE, n, 10.0) / ber_asymptotic(
                StrategyKind.DOUBLE_MAX_NO_NC, n, 10.0
            )
            check(math.isclose(ratio, 0.5, rel_tol=1e-12), f"N={n}: ratio {ratio}")
        row = tuple(
            table1_gain(kind, 2)
            for kind in (
                StrategyKind.MIN_MAX_SINGLE,
                StrategyKind.DOUBLE_MAX,
                StrategyKind.DOUBLE_MAX_NO_NC,
            )
        )
        check(np.allclose(row, (1.0, 0.75, 2.0), rtol=1e-12), f"gain table N=2: {row}")
        check(
            all(gain_d_over_s(n) < 1 for n in range(2, 17)),
            "dual selection gain not below 1",
        )
        return "asymptotic ratio 0.5, gain table N=2 = (1.0, 0.75, 2.0)"


class BackoffEquivalence:
    def run(self, context):
        samples = 2_000 if _quick(context) else 100_000
        rng = RngStream(_seed(context), 11).generator()
        for n in (2, 4, 8):
            power_gains = np.abs(complex_normal(rng, (samples, n, 2))) ** 2
            min_max = min_max_batch(power_gains)
            double_max = double_max_batch(power_gains)
            for row in range(samples):
                realization = ChannelRealization.from_power_gains(power_gains[row])
                winner = run_backoff_selection(realization, BackoffMode.MIN_MAX).winner
                check(winner == min_max[row], f"N={n} row {row}: min-max backoff")
                decision = run_two_step_backoff(realization)
                expected = tuple(sorted(set(double_max[row].tolist())))
                check(
                    tuple(sorted(decision.relays)) == expected,
                    f"N={n} row {row}: two-step backoff",
                )
        return f"{samples} realizations per N agree"


def _ks(label, samples, cdf):
    statistic = kstest(samples, cdf).statistic
    limit = max(KS_LIMIT, 2.0 / math.sqrt(len(samples)))
    logging.debug(f"KS {label}: {statistic:.5f} (limit {limit:.5f})")
    check(statistic < limit, f"KS {label}: {statistic:.5f} >= {limit:.5f}")
    return statistic


class DistributionalChecks:
    def run(self, context):
        samples = 100_000 if _quick(context) else 1_000_000
        n, gamma_rd = 4, 10.0
        rng = RngStream(_seed(context), 12).generator()
        snrs = gamma_rd * np.abs(complex_normal(rng, (samples, n, 2))) ** 2
        minimum = snrs.min(axis=-1)
        ordered = np.sort(snrs[:, :, 0], axis=-1)
        spacings = np.diff(ordered, axis=-1, prepend=0.0)
        worst = max(
            _ks("link SNR", snrs[:, 0, 0], lambda x: cdf_link_snr(x, gamma_rd)),
            _ks("min link SNR", minimum[:, 0], lambda x: cdf_min_link_snr(x, gamma_rd)),
            _ks(
                "max-min SNR",
                minimum.max(axis=-1),
                lambda x: cdf_max_min_snr(x, n, gamma_rd),
            ),
            _ks(
                "MRC SNR",
                snrs[:, :, 0].sum(axis=-1) / n,
                lambda x: cdf_mrc_snr(x, n, gamma_rd),
            ),
            *[
                _ks(
                    f"spacing {level}",
                    spacings[:, level - 1],
                    lambda x, rate=spacing_rate(level, n, gamma_rd): -np.expm1(
                        -rate * np.maximum(x, 0.0)
                    ),
                )
                for level in range(1, n + 1)
            ],
        )
        return f"largest KS statistic {worst:.5f}"


class SimulationSpotCheck:
    def run(self, context):
        trials = 100_000 if _quick(context) else 1_000_000
        workers = getattr(context["args"], "workers", 1)
        details = []
        for kind in (
            StrategyKind.DOUBLE_MAX,
            StrategyKind.DOUBLE_MAX_NO_NC,
            StrategyKind.ALL_RELAYS_NC,
        ):
            snr = SnrConfig.from_db(10.0, 2)
            estimate = estimate_ber(
                TrialConfig(
                    scheme=kind,
                    snr=snr,
                    trials=trials,
                    fidelity=Fidelity.SEMI_ANALYTIC,
                    master_seed=_seed(context),
                    workers=workers,
                )
            )
            exact = ber_exact(kind, 2, snr.gamma_rd).value
            deviation = abs(estimate.ber - exact) / estimate.stderr
            details.append(f"{kind.value} {deviation:.1f} sigma")
            check(
                deviation <= SIGMA_BAND,
                f"{kind.value}: simulated {estimate.ber} vs exact {exact}",
            )
        return ", ".join(details)


VALIDATION_PROCEDURE = [
    OracleEquivalence(),
    DiversityOrder(),
    GainIdentities(),
    BackoffEquivalence(),
    DistributionalChecks(),
    SimulationSpotCheck(),
]


def run_validation(args):
    context = run_procedure(VALIDATION_PROCEDURE, args)
    return context["results"]
