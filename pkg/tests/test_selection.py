import numpy as np
import pytest

from common.channel import ChannelRealization
from common.channel import RngStream
from common.channel import SnrConfig
from common.channel import complex_normal
from common.phy import conditional_ber
from common.phy import pair_effective_snrs
from common.phy import subset_effective_snrs
from common.selection import BackoffMode
from common.selection import SelectionDecision
from common.selection import StrategyKind
from common.selection import double_max_batch
from common.selection import dual_candidates
from common.selection import min_max_batch
from common.selection import optimal_dual_batch
from common.selection import optimal_single_batch
from common.selection import optimal_subset_batch
from common.selection import run_backoff_selection
from common.selection import run_two_step_backoff
from common.selection import select
from common.selection import select_batch
from common.selection import select_double_max
from common.selection import select_min_max
from common.selection import select_optimal_dual
from common.selection import select_optimal_single
from common.selection import select_optimal_subset
from common.selection import subset_memberships
from common.selection import surrogate_log_sum_ber


def random_power_gains(count, n_relays, stream_id=0):
    rng = RngStream(2010, stream_id).generator()
    return np.abs(complex_normal(rng, (count, n_relays, 2))) ** 2


def single_relay(n_relays=1):
    return ChannelRealization.from_power_gains(np.full((n_relays, 2), 0.7))


def test_min_max_example(example_realization):
    decision = select_min_max(example_realization)
    assert decision.relays == (1,)
    assert decision.power_shares == (1.0,)
    assert decision.scheme == StrategyKind.MIN_MAX_SINGLE


def test_single_relay_is_always_selected():
    cfg = SnrConfig(gamma_rd=10.0, n_relays=1)
    realization = single_relay()
    assert select_min_max(realization).relays == (0,)
    assert select_optimal_single(realization, cfg).relays == (0,)
    assert select_double_max(realization).relays == (0,)
    assert select_optimal_dual(realization, cfg).relays == (0,)
    assert select_optimal_subset(realization, cfg).relays == (0,)


def test_ties_break_to_lowest_index():
    realization = single_relay(3)
    cfg = SnrConfig(gamma_rd=10.0, n_relays=3)
    assert select_min_max(realization).relays == (0,)
    assert select_optimal_single(realization, cfg).relays == (0,)
    assert select_double_max(realization).relays == (0,)


def test_min_max_minimises_worst_user_ber():
    power_gains = random_power_gains(10_000, 4)
    worst_user_ber = conditional_ber(10.0 * power_gains).max(axis=-1)
    np.testing.assert_array_equal(
        min_max_batch(power_gains), np.argmin(worst_user_ber, axis=-1)
    )


def test_optimal_single_agrees_with_exact_q_selection():
    power_gains = random_power_gains(10_000, 4, stream_id=1)
    exact_choice = np.argmin(conditional_ber(10.0 * power_gains).sum(axis=-1), axis=-1)
    disagreement = np.mean(optimal_single_batch(power_gains, 10.0) != exact_choice)
    assert disagreement < 0.02


def test_optimal_single_matches_min_max_under_dominance():
    realization = ChannelRealization.from_power_gains([[0.1, 0.3], [2.0, 1.5]])
    cfg = SnrConfig(gamma_rd=10.0, n_relays=2)
    assert select_optimal_single(realization, cfg).relays == (1,)
    assert select_min_max(realization).relays == (1,)


def test_double_max_example(example_realization):
    decision = select_double_max(example_realization)
    assert decision.relays == (0, 1)
    assert decision.power_shares == (0.5, 0.5)


def test_double_max_singleton_gets_full_power():
    realization = ChannelRealization.from_power_gains([[0.9, 0.8], [0.5, 0.6]])
    decision = select_double_max(realization)
    assert decision.relays == (0,)
    assert decision.power_shares == (1.0,)


def test_dual_candidates_are_lexicographic():
    np.testing.assert_array_equal(
        dual_candidates(3), [[0, 0], [0, 1], [0, 2], [1, 1], [1, 2], [2, 2]]
    )


def test_optimal_dual_picks_dominant_relay():
    realization = ChannelRealization.from_power_gains([[5.0, 6.0], [0.01, 0.02]])
    cfg = SnrConfig(gamma_rd=10.0, n_relays=2)
    assert select_optimal_dual(realization, cfg).relays == (0,)


def exact_sum_ber(power_gains, pairs, gamma_rd):
    snrs = pair_effective_snrs(power_gains, pairs[:, 0], pairs[:, 1], gamma_rd)
    return conditional_ber(snrs).sum(axis=-1)


def test_optimal_dual_beats_double_max_on_exact_ber():
    power_gains = random_power_gains(10_000, 3, stream_id=2)
    optimal = exact_sum_ber(power_gains, optimal_dual_batch(power_gains, 10.0), 10.0)
    double_max = exact_sum_ber(power_gains, double_max_batch(power_gains), 10.0)
    assert np.mean(optimal <= double_max) >= 0.98


def test_optimal_subset_with_two_relays_matches_optimal_dual():
    power_gains = random_power_gains(2_000, 2, stream_id=3)
    memberships = optimal_subset_batch(power_gains, 10.0)
    pairs = optimal_dual_batch(power_gains, 10.0)
    expected = np.zeros_like(memberships)
    rows = np.arange(len(pairs))
    expected[rows, pairs[:, 0]] = 1.0
    expected[rows, pairs[:, 1]] = 1.0
    np.testing.assert_array_equal(memberships, expected)


def test_optimal_subset_is_exhaustive_minimum():
    power_gains = random_power_gains(1_000, 5, stream_id=4)
    chosen = optimal_subset_batch(power_gains, 10.0)
    all_subsets = subset_memberships(5)
    scores = surrogate_log_sum_ber(
        subset_effective_snrs(power_gains[:, None], all_subsets[None], 10.0)
    )
    chosen_scores = surrogate_log_sum_ber(
        subset_effective_snrs(power_gains, chosen, 10.0)
    )
    np.testing.assert_allclose(chosen_scores, scores.min(axis=-1), rtol=0, atol=1e-12)


def test_optimal_subset_size_guard():
    with pytest.raises(ValueError):
        optimal_subset_batch(random_power_gains(2, 13), 10.0)


def test_surrogate_ranking_survives_underflow():
    realization = ChannelRealization.from_power_gains([[1.0, 1.0], [1.1, 1.2]])
    cfg = SnrConfig(gamma_rd=1e4, n_relays=2)
    assert select_optimal_single(realization, cfg).relays == (1,)


def test_batch_forms_match_per_realization_forms():
    power_gains = random_power_gains(200, 4, stream_id=5)
    cfg = SnrConfig(gamma_rd=10.0, n_relays=4)
    for kind in StrategyKind:
        batch = select_batch(kind, power_gains, cfg.gamma_rd)
        for row in range(len(power_gains)):
            realization = ChannelRealization.from_power_gains(power_gains[row])
            decision = select(kind, realization, cfg)
            if kind.selects_subset:
                expected = tuple(np.flatnonzero(batch[row]))
            elif kind.selects_pair:
                expected = tuple(sorted(set(batch[row].tolist())))
            else:
                expected = (int(batch[row]),)
            assert tuple(sorted(decision.relays)) == expected


def test_argmax_invariance_under_scaling():
    power_gains = random_power_gains(1_000, 4, stream_id=6)
    np.testing.assert_array_equal(
        min_max_batch(power_gains), min_max_batch(3.7 * power_gains)
    )
    np.testing.assert_array_equal(
        double_max_batch(power_gains), double_max_batch(0.2 * power_gains)
    )


def test_permutation_equivariance():
    power_gains = random_power_gains(1_000, 4, stream_id=7)
    permutation = np.array([2, 0, 3, 1])
    permuted = power_gains[:, permutation]
    np.testing.assert_array_equal(
        permutation[min_max_batch(permuted)], min_max_batch(power_gains)
    )
    np.testing.assert_array_equal(
        permutation[double_max_batch(permuted)], double_max_batch(power_gains)
    )


def test_backoff_single_relay():
    assert run_backoff_selection(single_relay()).winner == 0


def test_backoff_min_max_matches_centralised(example_realization):
    outcome = run_backoff_selection(example_realization, BackoffMode.MIN_MAX)
    assert outcome.winner == select_min_max(example_realization).relays[0]
    assert outcome.timers[outcome.winner] == outcome.timers.min()


def test_backoff_per_user_matches_column_argmax():
    power_gains = random_power_gains(10_000, 4, stream_id=8)
    expected = np.argmax(power_gains[:, :, 1], axis=-1)
    for row in range(len(power_gains)):
        realization = ChannelRealization.from_power_gains(power_gains[row])
        outcome = run_backoff_selection(realization, BackoffMode.USER_2)
        assert outcome.winner == expected[row]


def test_dead_link_never_fires():
    realization = ChannelRealization.from_power_gains([[0.0, 0.0], [0.3, 0.4]])
    outcome = run_backoff_selection(realization, "minmax")
    assert np.isinf(outcome.timers[0])
    assert outcome.winner == 1


def test_two_step_backoff_equals_double_max(example_realization):
    assert run_two_step_backoff(example_realization) == select_double_max(
        example_realization
    )


def test_selection_decision_validation():
    with pytest.raises(ValueError):
        SelectionDecision((0, 0), (0.5, 0.5), StrategyKind.DOUBLE_MAX)
    with pytest.raises(ValueError):
        SelectionDecision((0, 1), (0.5, 0.5), StrategyKind.MIN_MAX_SINGLE)
    with pytest.raises(ValueError):
        SelectionDecision((0,), (0.9,), StrategyKind.MIN_MAX_SINGLE)
    with pytest.raises(ValueError):
        SelectionDecision((0, 1, 2), (0.3, 0.3, 0.4), StrategyKind.OPTIMAL_DUAL)


def test_strategy_names():
    assert StrategyKind.from_name("D-RS-NC") == StrategyKind.DOUBLE_MAX
    assert StrategyKind.from_name("nc-no-rs") == StrategyKind.ALL_RELAYS_NC
    with pytest.raises(ValueError):
        StrategyKind.from_name("best-relay")
