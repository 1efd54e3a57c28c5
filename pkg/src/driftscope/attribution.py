"""Local feature attributions and lazy recomputation management.

For a linear model the contribution of each feature to a prediction,
relative to a baseline input, has a closed form on the margin scale:
phi_j = w_j * (x_j - baseline_j), with the baseline outcome
phi0 = w . baseline + bias. The parts always add back up to the margin
exactly (local accuracy), which is what makes staleness detectable: if
the margin moved, some part moved.

The tracker keeps attributions for a set of pinned observations and
recomputes one only when the cluster tree reassigns its observation to
a different leaf or raises a local change alert at its leaf. Everything
else is reused as-is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .stream import Observation
from .tree import SCOPE_LOCAL, AdaptiveClusterTree, DriftAlert

REASON_INITIAL = "initial"
REASON_LEAF_CHANGE = "leaf-change"
REASON_LOCAL_ALERT = "local-alert"


@dataclass(frozen=True)
class AttributionVector:
    """Additive feature contributions on the margin scale at one step."""

    phi: np.ndarray
    phi0: float
    t: int

    def total(self) -> float:
        return self.phi0 + float(self.phi.sum())


@dataclass
class AttributionRecord:
    """A tracked observation with its stored attribution and history.

    ``history`` holds every computed vector (the initial one included),
    aligned with ``log`` entries of (step, reason). Between recompute
    events the stored attribution is simply the latest history entry.
    """

    obs: Observation
    current: AttributionVector
    leaf_id: int
    log: list[tuple[int, str]] = field(default_factory=list)
    history: list[AttributionVector] = field(default_factory=list)

    @property
    def recompute_count(self) -> int:
        return len(self.log)

    @property
    def start_t(self) -> int:
        return self.log[0][0]

    def stored_at(self, t: int) -> AttributionVector:
        """The attribution in effect at step t (piecewise constant)."""
        if t < self.start_t:
            raise ValueError(f"record tracked from step {self.start_t}, asked for {t}")
        chosen = self.history[0]
        for vec in self.history[1:]:
            if vec.t > t:
                break
            chosen = vec
        return chosen


def _require_linear(model) -> None:
    if not (hasattr(model, "weights") and hasattr(model, "bias") and hasattr(model, "margin")):
        raise TypeError(
            f"attribution needs a linear model with weights/bias/margin, got {type(model).__name__}"
        )


def attribute_linear(model, x: np.ndarray, baseline_input: np.ndarray, t: int = 0) -> AttributionVector:
    """Exact additive attribution of a linear model's margin.

    phi_j = w_j * (x_j - baseline_j) and phi0 = w . baseline + bias, so
    phi0 + sum(phi) recovers margin(x) up to rounding.
    """
    _require_linear(model)
    x = np.asarray(x, dtype=float)
    baseline_input = np.asarray(baseline_input, dtype=float)
    if x.shape != baseline_input.shape or x.shape != model.weights.shape:
        raise ValueError(
            f"shape mismatch: x {x.shape}, baseline {baseline_input.shape}, "
            f"weights {model.weights.shape}"
        )
    phi = model.weights * (x - baseline_input)
    phi0 = float(model.weights @ baseline_input) + model.bias
    return AttributionVector(phi=phi, phi0=phi0, t=t)


def verify_local_accuracy(model, x: np.ndarray, attribution: AttributionVector, tol: float = 1e-9) -> bool:
    """Whether the attribution still adds up to the model's margin at x."""
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    return abs(model.margin(np.asarray(x, dtype=float)) - attribution.total()) <= tol


class AttributionTracker:
    """Recomputes tracked attributions only on leaf change or local alert.

    Call ``track`` to pin an observation (its initial attribution is
    computed immediately) and ``step`` once per time step, after the
    tree has been updated, with that step's alerts. A leaf change takes
    precedence over a local alert when both apply at the same step.
    """

    def __init__(self, model, tree: AdaptiveClusterTree):
        _require_linear(model)
        self.model = model
        self.tree = tree
        self.records: list[AttributionRecord] = []

    def track(self, obs: Observation, baseline_input: np.ndarray, t: int) -> AttributionRecord:
        vec = attribute_linear(self.model, obs.x, baseline_input, t)
        leaf = self.tree.find_leaf(obs.x)
        record = AttributionRecord(
            obs=obs,
            current=vec,
            leaf_id=leaf.node_id,
            log=[(t, REASON_INITIAL)],
            history=[vec],
        )
        self.records.append(record)
        return record

    def step(
        self, alerts: list[DriftAlert], baseline_input: np.ndarray, t: int
    ) -> list[AttributionRecord]:
        """Refresh stale records for step t; returns those recomputed."""
        alerted_leaves = {a.node_id for a in alerts if a.scope == SCOPE_LOCAL}
        recomputed = []
        for record in self.records:
            leaf = self.tree.find_leaf(record.obs.x)
            if leaf.node_id != record.leaf_id:
                reason = REASON_LEAF_CHANGE
            elif leaf.node_id in alerted_leaves:
                reason = REASON_LOCAL_ALERT
            else:
                continue
            vec = attribute_linear(self.model, record.obs.x, baseline_input, t)
            record.current = vec
            record.leaf_id = leaf.node_id
            record.log.append((t, reason))
            record.history.append(vec)
            recomputed.append(record)
        return recomputed


def recompute_metrics(
    records: list[AttributionRecord], oracle_trajectories: list[np.ndarray]
) -> tuple[float, float]:
    """Score a tracking run against per-step oracle attributions.

    ``oracle_trajectories[i]`` is the (n_steps, m) array of attributions
    an always-recompute policy would have stored for record i, starting
    at the record's first tracked step. Returns the recomputation
    reduction in percent (1 minus computations per tracked step,
    averaged over records) and the mean absolute deviation of stored
    from oracle attributions over records, steps, and features.
    """
    if len(records) != len(oracle_trajectories):
        raise ValueError(
            f"{len(records)} records but {len(oracle_trajectories)} oracle trajectories"
        )
    if not records:
        raise ValueError("need at least one record to score")
    reductions = []
    abs_dev_sum = 0.0
    abs_dev_count = 0
    for record, oracle in zip(records, oracle_trajectories):
        oracle = np.asarray(oracle, dtype=float)
        n_steps = oracle.shape[0]
        if n_steps == 0:
            raise ValueError("oracle trajectory is empty")
        reductions.append(1.0 - record.recompute_count / n_steps)
        for k in range(n_steps):
            stored = record.stored_at(record.start_t + k)
            abs_dev_sum += float(np.abs(stored.phi - oracle[k]).sum())
            abs_dev_count += oracle.shape[1]
    return 100.0 * float(np.mean(reductions)), abs_dev_sum / abs_dev_count


def trace_rows(records: list[AttributionRecord]):
    """Flatten recompute events for CSV export.

    Yields (t, record_index, feature_index, phi, reason) rows, one per
    feature per recompute event, in step order within each record.
    """
    for i, record in enumerate(records):
        for (t, reason), vec in zip(record.log, record.history):
            for j, value in enumerate(vec.phi):
                yield (t, i, j, float(value), reason)
