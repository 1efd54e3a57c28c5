"""Prequential detection and attribution-tracking runs."""

import numpy as np
import pytest

from driftscope.baseline import EwmaBaseline
from driftscope.generators import DriftSchedule, SeaStream
from driftscope.injection import permute_inject
from driftscope.models import GaussianNaiveBayes, OnlineLogisticRegression, detector_input
from driftscope.pipeline import (
    MODEL_KINDS,
    TRACKING_POLICIES,
    build_model,
    cdleeds_runner,
    ddm_runner,
    run_detection,
    run_tracking,
)
from driftscope.stream import BufferedStream, buffer_stream, scaled
from driftscope.tree import SCOPE_GLOBAL, SCOPE_LOCAL


def _constant_stream(length=600, value=(2.0, 4.0, 6.0)):
    features = np.tile(np.asarray(value), (length, 1))
    labels = np.zeros(length, dtype=np.int64)
    labels[::2] = 1
    return BufferedStream(
        features=features,
        labels=labels,
        feature_ranges=((0.0, 10.0),) * len(value),
    )


def _sea(length=3000, seed=0, positions=(), widths=None):
    if positions:
        schedule = DriftSchedule(positions=tuple(positions), widths=widths)
        concepts = tuple(range(len(positions) + 1))
    else:
        schedule = None
        concepts = (0,)
    return buffer_stream(
        SeaStream(length=length, concepts=concepts, schedule=schedule, seed=seed)
    )


class TestBuildModel:
    def test_logreg(self):
        model = build_model("logreg", 3, 2)
        assert isinstance(model, OnlineLogisticRegression)

    def test_gnb(self):
        model = build_model("gnb", 3, 4)
        assert isinstance(model, GaussianNaiveBayes)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown model kind"):
            build_model("tree", 3, 2)

    def test_logreg_rejects_multiclass(self):
        with pytest.raises(ValueError, match="binary"):
            build_model("logreg", 3, 5)

    def test_kind_listing(self):
        assert MODEL_KINDS == ("logreg", "gnb")


class TestRunDetection:
    def test_model_learns_the_stationary_concept(self):
        result = run_detection(_sea(3000, seed=4), collect_stats=False)
        assert result.accuracy > 0.8

    def test_first_observation_only_trains(self):
        result = run_detection(_sea(500, seed=1))
        assert result.steps == 499
        assert result.stats[0][0] == 1
        assert result.stats[-1][0] == 499

    def test_prequential_accuracy_matches_manual_replay(self):
        stream = _sea(400, seed=7)
        result = run_detection(stream, model="logreg", learning_rate=0.1)
        clf = OnlineLogisticRegression(stream.n_features, learning_rate=0.1)
        correct = 0
        for item in scaled(stream):
            if item.t > 0:
                correct += int(clf.predict(item.x) >= 0.5) == item.y
            clf.update(item.x, item.y)
        assert result.accuracy == pytest.approx(correct / 399)

    def test_frozen_model_on_constant_stream_stays_silent(self):
        result = run_detection(_constant_stream(2000), learning_rate=0.0)
        assert result.alerts == ()
        assert result.global_alert_steps == []

    def test_alert_scopes_and_fields(self):
        stream = _sea(6000, seed=2, positions=(3000,))
        result = run_detection(stream, collect_stats=False)
        assert result.alerts
        for alert in result.alerts:
            assert alert.scope in (SCOPE_LOCAL, SCOPE_GLOBAL)
            assert 0 <= alert.p_value <= 1
            assert 1 <= alert.t < stream.length

    def test_global_alert_steps_sorted_unique(self):
        stream = _sea(6000, seed=2, positions=(3000,))
        result = run_detection(stream, collect_stats=False)
        steps = result.global_alert_steps
        assert steps == sorted(set(steps))
        assert steps, "an abrupt concept change should raise a global alert"

    def test_detects_abrupt_drift_within_window(self):
        stream = _sea(8000, seed=3, positions=(4000,))
        result = run_detection(stream, collect_stats=False)
        after = [t for t in result.global_alert_steps if t >= 4000]
        assert after and after[0] - 4000 <= 2000

    def test_identical_runs_identical_output(self):
        stream = _sea(1500, seed=9, positions=(800,))
        a = run_detection(stream)
        b = run_detection(stream)
        assert a.alerts == b.alerts
        assert a.stats == b.stats
        assert a.accuracy == b.accuracy

    def test_stats_track_tree_growth(self):
        result = run_detection(_sea(2000, seed=5))
        nodes = [row[1] for row in result.stats]
        leaves = [row[2] for row in result.stats]
        assert nodes[0] == 1 and leaves[0] == 1
        assert max(nodes) > 1
        assert all(l <= n for n, l in zip(nodes, leaves))

    def test_stats_can_be_disabled(self):
        result = run_detection(_sea(300, seed=5), collect_stats=False)
        assert result.stats == ()

    def test_gnb_model_runs(self):
        result = run_detection(_sea(800, seed=6), model="gnb", collect_stats=False)
        assert result.steps == 799
        assert 0.0 <= result.accuracy <= 1.0

    def test_range_free_stream_is_minmax_scaled(self):
        rng = np.random.default_rng(12)
        features = rng.normal(50.0, 20.0, size=(600, 3))
        labels = (features[:, 0] > 50.0).astype(np.int64)
        stream = BufferedStream(features=features, labels=labels)
        result = run_detection(stream, collect_stats=False)
        assert result.steps == 599

    def test_timing_fields_populated(self):
        result = run_detection(_sea(400, seed=8), collect_stats=False)
        assert result.mean_update_seconds > 0.0
        assert result.total_seconds >= result.mean_update_seconds * result.steps


class TestRunTracking:
    def test_policy_listing(self):
        assert TRACKING_POLICIES == ("cdleeds", "always", "never")

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValueError, match="unknown policy"):
            run_tracking(_sea(300), policy="sometimes")

    def test_negative_sample_size_rejected(self):
        with pytest.raises(ValueError, match="sample_size"):
            run_tracking(_sea(300), sample_size=-1)

    def test_sample_size_must_fit_prefix(self):
        with pytest.raises(ValueError, match="prefix"):
            run_tracking(_sea(300), sample_size=300, sample_prefix=300)

    def test_zero_sample_size_reports_nothing(self):
        result = run_tracking(_sea(300, seed=3), sample_size=0)
        assert result.reduction_pct is None
        assert result.mean_abs_deviation is None
        assert result.oracle_range is None
        assert result.trace == ()

    def test_always_policy_matches_oracle_exactly(self):
        result = run_tracking(
            _sea(600, seed=4), sample_size=5, sample_prefix=200, policy="always", seed=2
        )
        assert result.reduction_pct == pytest.approx(0.0)
        assert result.mean_abs_deviation == pytest.approx(0.0)

    def test_never_policy_computes_each_slot_once(self):
        result = run_tracking(
            _sea(600, seed=4), sample_size=5, sample_prefix=200, policy="never", seed=2
        )
        # each tracked observation is attributed once on arrival and
        # never refreshed, so the reduction is 1 - 1/steps per slot
        assert result.reduction_pct > 99.0
        assert result.mean_abs_deviation > 0.0

    def test_lazy_policy_tracks_oracle_closer_than_never(self):
        stream = permute_inject(
            buffer_stream(SeaStream(length=4000, seed=5)), (2000,), seed=5
        )
        lazy = run_tracking(stream, sample_size=10, sample_prefix=500, seed=6)
        frozen = run_tracking(stream, sample_size=10, sample_prefix=500, policy="never", seed=6)
        assert lazy.mean_abs_deviation < frozen.mean_abs_deviation
        assert 0.0 < lazy.reduction_pct <= 100.0

    def test_identical_runs_identical_trace(self):
        stream = _sea(900, seed=10, positions=(500,))
        a = run_tracking(stream, sample_size=8, sample_prefix=300, seed=1)
        b = run_tracking(stream, sample_size=8, sample_prefix=300, seed=1)
        assert a.trace == b.trace
        assert a.reduction_pct == b.reduction_pct

    def test_trace_rows_are_well_formed(self):
        stream = _sea(900, seed=10, positions=(500,))
        result = run_tracking(stream, sample_size=8, sample_prefix=300, seed=1)
        assert result.trace
        reasons = {"initial", "leaf-change", "local-alert", "every-step"}
        for t, slot, feature, value, reason in result.trace:
            assert 1 <= t < stream.length
            assert 0 <= slot < 8
            assert 0 <= feature < stream.n_features
            assert isinstance(value, float)
            assert reason in reasons

    def test_oracle_can_be_disabled(self):
        result = run_tracking(_sea(400, seed=2), sample_size=4, sample_prefix=200, oracle=False)
        assert result.mean_abs_deviation is None
        assert result.oracle_range is None
        assert result.reduction_pct is not None

    def test_multiclass_stream_rejected(self):
        features = np.random.default_rng(0).uniform(size=(300, 2))
        labels = np.arange(300, dtype=np.int64) % 3
        stream = BufferedStream(features=features, labels=labels)
        with pytest.raises(ValueError, match="binary"):
            run_tracking(stream, sample_size=2, sample_prefix=100)


class TestRunners:
    def test_cdleeds_runner_returns_sorted_steps(self):
        stream = _sea(4000, seed=2, positions=(2000,))
        alerts, mean_seconds = cdleeds_runner()(stream)
        assert alerts == sorted(alerts)
        assert mean_seconds > 0.0

    def test_ddm_runner_fires_on_label_inversion(self):
        rng = np.random.default_rng(21)
        features = rng.uniform(size=(4000, 2))
        labels = (features[:, 0] > 0.5).astype(np.int64)
        labels[2000:] = 1 - labels[2000:]
        stream = BufferedStream(
            features=features, labels=labels, drift_positions=(2000,)
        )
        alerts, _ = ddm_runner()(stream)
        assert alerts
        assert 2000 <= alerts[0] <= 2600

    def test_ddm_runner_quiet_on_learnable_stream(self):
        rng = np.random.default_rng(22)
        features = rng.uniform(size=(3000, 2))
        labels = (features[:, 0] > 0.5).astype(np.int64)
        stream = BufferedStream(features=features, labels=labels)
        alerts, _ = ddm_runner()(stream)
        assert len(alerts) <= 1


class TestDetectorInputWiring:
    def test_diff_is_margin_minus_baseline_margin(self):
        # run two steps by hand and mirror the pipeline's diff
        stream = _constant_stream(3)
        source = scaled(stream)
        items = list(source)
        clf = OnlineLogisticRegression(3, learning_rate=0.1)
        baseline = EwmaBaseline(0.001)
        baseline.update(items[0].x)
        clf.update(items[0].x, items[0].y)
        baseline.update(items[1].x)
        diff = detector_input(clf.predict(items[1].x), baseline.value(clf))
        assert isinstance(diff, float)
        # constant stream: observation equals the baseline, so no gap
        assert diff == pytest.approx(0.0, abs=1e-12)
