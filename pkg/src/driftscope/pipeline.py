"""Prequential runs wiring streams, models, baseline, and the tree.

Every run follows test-then-train order: the model predicts each
observation before training on its label, and the detector consumes
that pre-update prediction. Feature vectors are scaled to the unit box
first (declared generator ranges, or a min-max fit for buffered data)
so that the tree's similarity threshold means the same thing on every
stream.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .attribution import AttributionTracker, attribute_linear
from .baseline import EwmaBaseline
from .evaluation import DetectorRunner, DdmDetector, STATUS_DRIFT
from .models import GaussianNaiveBayes, OnlineLogisticRegression, detector_input
from .stream import StreamSource, scaled
from .tree import SCOPE_GLOBAL, AdaptiveClusterTree, DriftAlert

MODEL_KINDS = ("logreg", "gnb")
TRACKING_POLICIES = ("cdleeds", "always", "never")


def build_model(kind: str, n_features: int, n_classes: int, learning_rate: float = 0.1):
    if kind == "logreg":
        if n_classes > 2:
            raise ValueError(f"logreg handles binary streams only, got {n_classes} classes")
        return OnlineLogisticRegression(n_features, learning_rate=learning_rate)
    if kind == "gnb":
        return GaussianNaiveBayes(n_features, n_classes)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def _predicted_class(model, x) -> int:
    out = model.predict(x)
    if np.ndim(out) == 0:
        return int(out >= 0.5)
    return int(np.argmax(out))


@dataclass(frozen=True)
class RunResult:
    """Everything a detection run produces, timing kept separate."""

    alerts: tuple[DriftAlert, ...]
    stats: tuple[tuple[int, int, int], ...]  # (t, node_count, leaf_count)
    accuracy: float
    steps: int
    mean_update_seconds: float
    total_seconds: float

    @property
    def global_alert_steps(self) -> list[int]:
        return sorted({a.t for a in self.alerts if a.scope == SCOPE_GLOBAL})


def run_detection(
    stream: StreamSource,
    model: str = "logreg",
    learning_rate: float = 0.1,
    gamma: float = 0.95,
    alpha: float = 0.01,
    beta: float = 0.001,
    window: int = 200,
    max_age: int = 100,
    max_depth: int | None = 5,
    collect_stats: bool = True,
) -> RunResult:
    """Run the change detector prequentially over a labeled stream.

    The first observation only trains the model and seeds the baseline;
    detection starts at step 1 so that the detector always sees a model
    that has been trained at least once.
    """
    source = scaled(stream)
    clf = build_model(model, source.n_features, source.n_classes, learning_rate)
    baseline = EwmaBaseline(beta)
    tree = AdaptiveClusterTree(
        source.n_features,
        gamma=gamma,
        alpha=alpha,
        window=window,
        max_age=max_age,
        max_depth=max_depth,
    )
    alerts: list[DriftAlert] = []
    stats: list[tuple[int, int, int]] = []
    correct = 0
    steps = 0
    detector_seconds = 0.0
    started = time.perf_counter()
    for item in source:
        t, x, y = item.t, item.x, item.y
        if t == 0:
            baseline.update(x)
            clf.update(x, y)
            continue
        correct += _predicted_class(clf, x) == y
        steps += 1
        tick = time.perf_counter()
        baseline.update(x)
        diff = detector_input(clf.predict(x), baseline.value(clf))
        alerts.extend(tree.update(x, diff, t))
        global_alert = tree.test_global_change()
        if global_alert is not None:
            alerts.append(global_alert)
        detector_seconds += time.perf_counter() - tick
        if collect_stats:
            stats.append((t, tree.node_count, tree.leaf_count))
        clf.update(x, y)
    total_seconds = time.perf_counter() - started
    return RunResult(
        alerts=tuple(alerts),
        stats=tuple(stats),
        accuracy=correct / steps if steps else 0.0,
        steps=steps,
        mean_update_seconds=detector_seconds / steps if steps else 0.0,
        total_seconds=total_seconds,
    )


@dataclass(frozen=True)
class TrackingResult:
    """Lazy-recompute tracking scored against the always-recompute oracle."""

    sample_size: int
    steps: int
    reduction_pct: float | None
    mean_abs_deviation: float | None
    oracle_range: float | None
    deviation_pct_of_range: float | None
    trace: tuple[tuple[int, int, int, float, str], ...]
    mean_update_seconds: float
    total_seconds: float


@dataclass
class _TrackedSlot:
    obs_x: np.ndarray
    start_t: int
    stored_phi: np.ndarray
    computes: int = 1
    record: object = None
    trace: list = field(default_factory=list)


def run_tracking(
    stream: StreamSource,
    sample_size: int = 100,
    sample_prefix: int = 1000,
    policy: str = "cdleeds",
    oracle: bool = True,
    seed: int = 0,
    learning_rate: float = 0.1,
    gamma: float = 0.95,
    alpha: float = 0.01,
    beta: float = 0.001,
    window: int = 200,
    max_age: int = 100,
    max_depth: int | None = 5,
) -> TrackingResult:
    """Track attributions for observations sampled from the stream prefix.

    Tracked observations are pinned on arrival (drawn without
    replacement from steps 1..sample_prefix-1; step 0 only warms the
    model up) and their stored attributions are refreshed according to
    ``policy``: reuse until leaf change or local alert, recompute every
    step, or never refresh. With ``oracle`` on, an always-recompute
    shadow is maintained for every slot and the deviation of stored
    from oracle attributions is accumulated streamingly.
    """
    if policy not in TRACKING_POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {TRACKING_POLICIES}")
    if sample_size < 0:
        raise ValueError(f"sample_size must be >= 0, got {sample_size}")
    prefix_end = min(sample_prefix, stream.length)
    if sample_size >= prefix_end:
        raise ValueError(
            f"sample_size {sample_size} does not fit the stream prefix [1, {prefix_end})"
        )
    source = scaled(stream)
    if source.n_classes > 2:
        raise ValueError("attribution tracking needs a linear model, so a binary stream")
    clf = OnlineLogisticRegression(source.n_features, learning_rate=learning_rate)
    baseline = EwmaBaseline(beta)
    tree = AdaptiveClusterTree(
        source.n_features,
        gamma=gamma,
        alpha=alpha,
        window=window,
        max_age=max_age,
        max_depth=max_depth,
    )
    tracker = AttributionTracker(clf, tree) if policy == "cdleeds" else None
    rng = np.random.default_rng(seed)
    pin_steps = set()
    if sample_size:
        pin_steps = {int(v) + 1 for v in rng.choice(prefix_end - 1, size=sample_size, replace=False)}
    slots: list[_TrackedSlot] = []
    dev_sum = 0.0
    dev_count = 0
    oracle_min = np.inf
    oracle_max = -np.inf
    detector_seconds = 0.0
    steps = 0
    started = time.perf_counter()
    for item in source:
        t, x, y = item.t, item.x, item.y
        if t == 0:
            baseline.update(x)
            clf.update(x, y)
            continue
        steps += 1
        tick = time.perf_counter()
        baseline.update(x)
        diff = detector_input(clf.predict(x), baseline.value(clf))
        alerts = tree.update(x, diff, t)
        global_alert = tree.test_global_change()
        if global_alert is not None:
            alerts.append(global_alert)
        base_vec = baseline.ewma
        if tracker is not None and slots:
            tracker.step(alerts, base_vec, t)
            for slot in slots:
                slot.stored_phi = slot.record.current.phi
                if slot.record.recompute_count > slot.computes:
                    slot.computes = slot.record.recompute_count
                    slot.trace.append((t, slot.record.log[-1][1], slot.record.current))
        elif policy == "always":
            for slot in slots:
                vec = attribute_linear(clf, slot.obs_x, base_vec, t)
                slot.stored_phi = vec.phi
                slot.computes += 1
                slot.trace.append((t, "every-step", vec))
        if t in pin_steps:
            if tracker is not None:
                record = tracker.track(item.obs, base_vec, t)
                slots.append(
                    _TrackedSlot(
                        obs_x=x,
                        start_t=t,
                        stored_phi=record.current.phi,
                        record=record,
                        trace=[(t, record.log[0][1], record.current)],
                    )
                )
            else:
                vec = attribute_linear(clf, x, base_vec, t)
                slots.append(
                    _TrackedSlot(
                        obs_x=x,
                        start_t=t,
                        stored_phi=vec.phi,
                        trace=[(t, "initial", vec)],
                    )
                )
        detector_seconds += time.perf_counter() - tick
        if oracle and slots:
            for slot in slots:
                oracle_phi = clf.weights * (slot.obs_x - base_vec)
                lo = float(oracle_phi.min())
                hi = float(oracle_phi.max())
                oracle_min = lo if lo < oracle_min else oracle_min
                oracle_max = hi if hi > oracle_max else oracle_max
                dev_sum += float(np.abs(slot.stored_phi - oracle_phi).sum())
                dev_count += oracle_phi.size
        clf.update(x, y)
    total_seconds = time.perf_counter() - started
    last_t = stream.length - 1
    if slots:
        reductions = [1.0 - slot.computes / (last_t - slot.start_t + 1) for slot in slots]
        reduction_pct = 100.0 * float(np.mean(reductions))
    else:
        reduction_pct = None
    mean_abs_deviation = dev_sum / dev_count if oracle and dev_count else None
    oracle_range = float(oracle_max - oracle_min) if oracle and dev_count else None
    deviation_pct_of_range = (
        100.0 * mean_abs_deviation / oracle_range if oracle_range else None
    )
    trace = tuple(
        (t, i, j, float(value), reason)
        for i, slot in enumerate(slots)
        for t, reason, vec in slot.trace
        for j, value in enumerate(vec.phi)
    )
    return TrackingResult(
        sample_size=sample_size,
        steps=steps,
        reduction_pct=reduction_pct,
        mean_abs_deviation=mean_abs_deviation,
        oracle_range=oracle_range,
        deviation_pct_of_range=deviation_pct_of_range,
        trace=trace,
        mean_update_seconds=detector_seconds / steps if steps else 0.0,
        total_seconds=total_seconds,
    )


def cdleeds_runner(
    model: str = "logreg",
    learning_rate: float = 0.1,
    gamma: float = 0.95,
    alpha: float = 0.01,
    beta: float = 0.001,
    window: int = 200,
    max_age: int = 100,
    max_depth: int | None = 5,
) -> DetectorRunner:
    """Benchmark runner scoring the tree's global alerts."""

    def run(stream: StreamSource) -> tuple[list[int], float]:
        result = run_detection(
            stream,
            model=model,
            learning_rate=learning_rate,
            gamma=gamma,
            alpha=alpha,
            beta=beta,
            window=window,
            max_age=max_age,
            max_depth=max_depth,
            collect_stats=False,
        )
        return result.global_alert_steps, result.mean_update_seconds

    return run


def ddm_runner(model: str = "logreg", learning_rate: float = 0.1) -> DetectorRunner:
    """Benchmark runner for the error-rate baseline detector."""

    def run(stream: StreamSource) -> tuple[list[int], float]:
        source = scaled(stream)
        clf = build_model(model, source.n_features, source.n_classes, learning_rate)
        ddm = DdmDetector()
        alerts: list[int] = []
        detector_seconds = 0.0
        steps = 0
        for item in source:
            t, x, y = item.t, item.x, item.y
            if t == 0:
                clf.update(x, y)
                continue
            steps += 1
            is_correct = _predicted_class(clf, x) == y
            tick = time.perf_counter()
            if ddm.update(is_correct) == STATUS_DRIFT:
                alerts.append(t)
            detector_seconds += time.perf_counter() - tick
            clf.update(x, y)
        return alerts, detector_seconds / steps if steps else 0.0

    return run
