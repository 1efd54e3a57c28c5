"""Synthetic labeled streams with scheduled concept drift.

Two classic generator families are provided. SEA draws three uniform
features on [0, 10] and thresholds the sum of the first two; Agrawal
draws nine mixed demographic features and labels them with one of the
standard rule sets. Concepts switch abruptly or mix gradually through a
sigmoid transition window around each scheduled drift position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .stream import LabeledObservation, Observation, StreamSource

SEA_THRESHOLDS = (8.0, 9.0, 7.0, 9.5)

AGRAWAL_FEATURE_NAMES = (
    "salary",
    "commission",
    "age",
    "elevel",
    "car",
    "zipcode",
    "hvalue",
    "hyears",
    "loan",
)


@dataclass(frozen=True)
class DriftSchedule:
    """Scheduled drift positions with per-drift transition widths.

    ``positions`` are step indices where each new concept takes over;
    ``widths`` give the length of the sigmoid mixing window centered on
    the position (0 means an abrupt switch). Transition windows must not
    overlap each other.
    """

    positions: tuple[int, ...] = ()
    widths: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        positions = tuple(int(p) for p in self.positions)
        widths = tuple(int(w) for w in self.widths) if self.widths else (0,) * len(positions)
        if len(widths) != len(positions):
            raise ValueError(
                f"schedule has {len(positions)} positions but {len(widths)} widths"
            )
        if any(p <= 0 for p in positions):
            raise ValueError(f"drift positions must be positive, got {positions}")
        if any(w < 0 for w in widths):
            raise ValueError(f"drift widths must be >= 0, got {widths}")
        if list(positions) != sorted(set(positions)):
            raise ValueError(f"drift positions must be strictly increasing, got {positions}")
        for (p1, w1), (p2, w2) in zip(zip(positions, widths), zip(positions[1:], widths[1:])):
            if p1 + w1 / 2.0 >= p2 - w2 / 2.0:
                raise ValueError(
                    f"transition windows around positions {p1} and {p2} overlap"
                )
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "widths", widths)

    def validate_for_length(self, length: int) -> None:
        if self.positions and self.positions[-1] >= length:
            raise ValueError(
                f"drift position {self.positions[-1]} is beyond the stream length {length}"
            )


def transition_probability(t: int, position: int, width: int) -> float:
    """Probability of drawing from the incoming concept near a drift.

    Follows the sigmoid 1 / (1 + exp(-4 (t - position) / width)); at the
    position itself the two concepts are equally likely. Width 0 is a
    hard switch at the position.
    """
    if width <= 0:
        return 1.0 if t >= position else 0.0
    z = -4.0 * (t - position) / width
    if z >= 0:
        return 1.0 / (1.0 + math.exp(min(z, 700.0)))
    e = math.exp(max(z, -700.0))
    return 1.0 / (1.0 + e)


def _concept_index(schedule: DriftSchedule, t: int, rng: np.random.Generator) -> int:
    """Index of the active concept at step t, drawing inside transitions."""
    idx = 0
    for k, (pos, width) in enumerate(zip(schedule.positions, schedule.widths)):
        lo = pos - width / 2.0
        hi = pos + width / 2.0
        if t < lo:
            break
        if t >= hi:
            idx = k + 1
            continue
        # inside this transition window: mix the two adjacent concepts
        if rng.random() < transition_probability(t, pos, width):
            idx = k + 1
        break
    return idx


class _GeneratorBase(StreamSource):
    """Common drift sequencing for the synthetic generators."""

    def __init__(self, length: int, concepts, schedule: DriftSchedule | None, seed: int):
        if length < 1:
            raise ValueError(f"stream length must be >= 1, got {length}")
        self.schedule = schedule or DriftSchedule()
        self.schedule.validate_for_length(length)
        self.concepts = tuple(int(c) for c in concepts)
        if len(self.concepts) != len(self.schedule.positions) + 1:
            raise ValueError(
                f"{len(self.schedule.positions)} drifts need "
                f"{len(self.schedule.positions) + 1} concepts, got {len(self.concepts)}"
            )
        self.length = length
        self.seed = seed
        self.drift_positions = self.schedule.positions

    def _emit(self, t: int, rng: np.random.Generator) -> LabeledObservation:
        raise NotImplementedError

    def __iter__(self) -> Iterator[LabeledObservation]:
        rng = np.random.default_rng(self.seed)
        for t in range(self.length):
            yield self._emit(t, rng)


class SeaStream(_GeneratorBase):
    """SEA concepts: label 1 when the first two features sum below a threshold.

    Features are uniform on [0, 10]^3 and only the first two carry
    signal. Concepts pick thresholds from ``SEA_THRESHOLDS``;
    ``perturbation`` is the probability of flipping a label.
    """

    n_features = 3
    n_classes = 2
    feature_names = ("f0", "f1", "f2")
    feature_ranges = ((0.0, 10.0), (0.0, 10.0), (0.0, 10.0))

    def __init__(
        self,
        length: int,
        concepts=(0,),
        schedule: DriftSchedule | None = None,
        perturbation: float = 0.1,
        seed: int = 0,
    ):
        super().__init__(length, concepts, schedule, seed)
        if any(not 0 <= c < len(SEA_THRESHOLDS) for c in self.concepts):
            raise ValueError(f"SEA concepts must index {SEA_THRESHOLDS}, got {self.concepts}")
        if not 0.0 <= perturbation < 1.0:
            raise ValueError(f"perturbation must lie in [0, 1), got {perturbation}")
        self.perturbation = perturbation

    def _emit(self, t: int, rng: np.random.Generator) -> LabeledObservation:
        concept = self.concepts[_concept_index(self.schedule, t, rng)]
        threshold = SEA_THRESHOLDS[concept]
        x = rng.uniform(0.0, 10.0, size=3)
        label = 1 if x[0] + x[1] <= threshold else 0
        if rng.random() < self.perturbation:
            label = 1 - label
        return LabeledObservation(Observation(t, x), label)


# Classification rule sets 0..2 of the classic loan-approval generator.
# Class 0 is "group A" in each rule.
def _agrawal_rule_0(salary, commission, age, elevel):
    return 0 if (age < 40 or age >= 60) else 1


def _agrawal_rule_1(salary, commission, age, elevel):
    if age < 40:
        return 0 if 50_000 <= salary <= 100_000 else 1
    if age < 60:
        return 0 if 75_000 <= salary <= 125_000 else 1
    return 0 if 25_000 <= salary <= 75_000 else 1


def _agrawal_rule_2(salary, commission, age, elevel):
    if age < 40:
        return 0 if elevel in (0, 1) else 1
    if age < 60:
        return 0 if elevel in (1, 2, 3) else 1
    return 0 if elevel in (2, 3, 4) else 1


AGRAWAL_RULES = (_agrawal_rule_0, _agrawal_rule_1, _agrawal_rule_2)


class AgrawalStream(_GeneratorBase):
    """Loan-approval generator with nine mixed features.

    Implements classification functions 0-2. The label is computed on
    the clean feature values; ``perturbation`` then jitters each numeric
    feature by a uniform offset of up to that fraction of its range,
    clipped back to the legal range.
    """

    n_features = 9
    n_classes = 2
    feature_names = AGRAWAL_FEATURE_NAMES
    feature_ranges = (
        (20_000.0, 150_000.0),  # salary
        (0.0, 75_000.0),  # commission (0 when salary >= 75k)
        (20.0, 80.0),  # age
        (0.0, 4.0),  # elevel
        (1.0, 20.0),  # car
        (0.0, 8.0),  # zipcode
        (50_000.0, 1_350_000.0),  # hvalue, scaled by zipcode
        (1.0, 30.0),  # hyears
        (0.0, 500_000.0),  # loan
    )

    def __init__(
        self,
        length: int,
        concepts=(0,),
        schedule: DriftSchedule | None = None,
        perturbation: float = 0.1,
        seed: int = 0,
    ):
        super().__init__(length, concepts, schedule, seed)
        if any(not 0 <= c < len(AGRAWAL_RULES) for c in self.concepts):
            raise ValueError(
                f"Agrawal concepts must index functions 0..{len(AGRAWAL_RULES) - 1}, got {self.concepts}"
            )
        if not 0.0 <= perturbation < 1.0:
            raise ValueError(f"perturbation must lie in [0, 1), got {perturbation}")
        self.perturbation = perturbation

    def _perturb(self, rng, value, lo, hi):
        value += self.perturbation * (hi - lo) * (2.0 * rng.random() - 1.0)
        return min(max(value, lo), hi)

    def _emit(self, t: int, rng: np.random.Generator) -> LabeledObservation:
        concept = self.concepts[_concept_index(self.schedule, t, rng)]
        salary = rng.uniform(20_000.0, 150_000.0)
        commission = 0.0 if salary >= 75_000.0 else rng.uniform(10_000.0, 75_000.0)
        age = rng.uniform(20.0, 80.0)
        elevel = int(rng.integers(0, 5))
        car = int(rng.integers(1, 21))
        zipcode = int(rng.integers(0, 9))
        hvalue = (9.0 - zipcode) * 100_000.0 * rng.uniform(0.5, 1.5)
        hyears = float(rng.integers(1, 31))
        loan = rng.uniform(0.0, 500_000.0)
        label = AGRAWAL_RULES[concept](salary, commission, age, elevel)
        if self.perturbation > 0.0:
            salary = self._perturb(rng, salary, 20_000.0, 150_000.0)
            if commission > 0.0:
                commission = self._perturb(rng, commission, 10_000.0, 75_000.0)
            age = self._perturb(rng, age, 20.0, 80.0)
            hval_lo = (9.0 - zipcode) * 50_000.0
            hval_hi = (9.0 - zipcode) * 150_000.0
            hvalue = self._perturb(rng, hvalue, hval_lo, hval_hi)
            hyears = self._perturb(rng, hyears, 1.0, 30.0)
            loan = self._perturb(rng, loan, 0.0, 500_000.0)
        x = np.array(
            [salary, commission, age, float(elevel), float(car), float(zipcode), hvalue, hyears, loan]
        )
        return LabeledObservation(Observation(t, x), label)


def make_generator(kind: str, **kwargs) -> StreamSource:
    """Instantiate a generator by name ('sea' or 'agrawal')."""
    kinds = {"sea": SeaStream, "agrawal": AgrawalStream}
    if kind not in kinds:
        raise ValueError(f"unknown generator kind {kind!r}; expected one of {sorted(kinds)}")
    return kinds[kind](**kwargs)
