import csv
import math

import numpy as np
import pytest

from nncov.axioms import (
    StabilityReport,
    check_duplicates,
    check_monotonicity,
    check_order_independence,
    replay_witness,
    run_axiom_checks,
    shuffle_study,
    stability_rows,
    write_stability_csv,
)
from nncov.criteria import make_criterion
from nncov.trace import ActivationTrace, LayerTrace


def outlier_pair_trace(n=60, seed=0):
    """Mostly small activations with one extreme pair: order-sensitive by design."""
    rng = np.random.default_rng(seed)
    values = rng.uniform(-0.5, 0.5, size=n - 2)
    data = np.concatenate([values, [10.0, -10.0]])[:, None]
    return ActivationTrace(layers=(LayerTrace("n", data),))


class TestMonotonicity:
    def test_nlc_violates_on_the_worked_fixture(self, single_neuron_trace):
        part = check_monotonicity(
            make_criterion("nlc"), single_neuron_trace, trials=50, chain_len=3, seed=1
        )
        assert part.violations >= 1
        assert part.witness is not None

    def test_nc_never_violates(self, small_net_trace):
        part = check_monotonicity(
            make_criterion("nc", threshold=0.25), small_net_trace, trials=200, seed=2
        )
        assert part.violations == 0
        assert part.witness is None

    def test_detcov_violations_are_recorded_not_asserted_absent(self, small_net_trace):
        part = check_monotonicity(
            make_criterion("detcov"), small_net_trace, trials=50, seed=3
        )
        assert part.violations >= 0  # observed count is reported either way
        assert part.trials == 50

    def test_witness_replays_to_a_violation(self, single_neuron_trace):
        criterion = make_criterion("nlc")
        part = check_monotonicity(criterion, single_neuron_trace, trials=50, seed=1)
        assert replay_witness(criterion, single_neuron_trace, part.witness)

    def test_chain_len_must_be_at_least_two(self, single_neuron_trace):
        with pytest.raises(ValueError):
            check_monotonicity(make_criterion("nlc"), single_neuron_trace, 5, chain_len=1)


class TestOrderIndependence:
    def test_batch_nlc_is_order_free(self, small_net_trace):
        part = check_order_independence(
            make_criterion("nlc"), small_net_trace, trials=20, seed=0
        )
        full_value = make_criterion("nlc").evaluate(
            small_net_trace, small_net_trace.full_view()
        ).value
        assert part.max_delta <= 1e-9 * abs(full_value)

    def test_incremental_nlc_hits_the_fixture_delta(self, single_neuron_trace):
        part = check_order_independence(
            make_criterion("nlc-inc", batch_size=2), single_neuron_trace, trials=20, seed=0
        )
        assert part.max_delta == 37.5

    def test_nc_has_zero_delta(self, small_net_trace):
        part = check_order_independence(
            make_criterion("nc", threshold=0.25), small_net_trace, trials=20, seed=0
        )
        assert part.max_delta == 0.0


class TestDuplicates:
    def test_discrete_criteria_are_duplicate_blind(self, small_net_trace):
        part = check_duplicates(
            make_criterion("tknc", k=1), small_net_trace, trials=50, seed=4
        )
        assert part.violations == 0

    def test_nlc_sees_multiplicities(self, single_neuron_trace):
        part = check_duplicates(make_criterion("nlc"), single_neuron_trace, trials=50, seed=4)
        assert part.violations > 0


class TestShuffleStudy:
    def test_control_row_has_zero_spread(self, small_net_trace):
        control, _ = shuffle_study(
            make_criterion("nlc"), small_net_trace, runs=5, seed=0
        )
        assert control.std == 0.0
        assert control.max_pct_drop == 0.0

    def test_batch_criterion_is_stable_under_shuffling(self, small_net_trace):
        _, shuffled = shuffle_study(make_criterion("nlc"), small_net_trace, runs=5, seed=0)
        assert shuffled.std <= 1e-9

    def test_incremental_on_outlier_fixture_drops_hard(self):
        trace = outlier_pair_trace()
        _, shuffled = shuffle_study(
            make_criterion("nlc-inc", batch_size=2), trace, runs=20, seed=7
        )
        assert shuffled.std > 0
        assert shuffled.max_pct_drop >= 5.0

    def test_sem_is_std_over_sqrt_runs(self, small_net_trace):
        _, shuffled = shuffle_study(
            make_criterion("nlc-inc", batch_size=2), small_net_trace, runs=20, seed=1
        )
        assert shuffled.sem == shuffled.std / math.sqrt(20)
        if shuffled.mean:
            assert shuffled.relative_sem == shuffled.sem / shuffled.mean

    def test_all_zero_values_flag_degenerate(self):
        report = StabilityReport.from_values([0.0, 0.0, 0.0])
        assert report.max_pct_drop == 0.0
        assert report.degenerate

    def test_runs_must_be_at_least_two(self, small_net_trace):
        with pytest.raises(ValueError):
            shuffle_study(make_criterion("nlc"), small_net_trace, runs=1)


class TestReports:
    def test_reports_reproducible_bit_for_bit(self, single_neuron_trace):
        kwargs = dict(monotone_trials=30, permutation_trials=10, duplicate_trials=10, seed=5)
        a = run_axiom_checks(make_criterion("nlc"), single_neuron_trace, **kwargs)
        b = run_axiom_checks(make_criterion("nlc"), single_neuron_trace, **kwargs)
        assert a == b
        assert a.to_json() == b.to_json()

    def test_stability_csv_layout(self, tmp_path, small_net_trace):
        control, shuffled = shuffle_study(make_criterion("nlc"), small_net_trace, runs=3)
        path = tmp_path / "stability.csv"
        write_stability_csv(path, stability_rows("nlc", control, shuffled))
        with open(path, newline="") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["criterion", "shuffled", "std", "sem", "relative_sem", "max_pct_drop"]
        assert rows[1][0] == "nlc" and rows[1][1] == "no"
        assert rows[2][1] == "yes"
        assert float(rows[1][2]) == 0.0
