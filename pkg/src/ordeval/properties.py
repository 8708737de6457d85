"""Randomised audit of metrics against ordinal invariance, ordinal
monotonicity and the imbalance property.

A verdict of ``NoViolationFound`` only means none of the fixed probes or
``trials`` random cases broke the property; it is never a proof.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .baselines import get_metric, list_metrics
from .errors import DegenerateInput, PreconditionError

log = logging.getLogger(__name__)

TOLERANCE = 1e-9

MIN_CLASSES, MAX_CLASSES = 3, 11
MIN_ITEMS, MAX_ITEMS = 10, 200


class PropertyId(enum.Enum):
    ORDINAL_INVARIANCE = "OrdinalInvariance"
    ORDINAL_MONOTONICITY = "OrdinalMonotonicity"
    IMBALANCE = "Imbalance"


PROPERTIES = tuple(PropertyId)

# (invariance, monotonicity, imbalance); True where the reference table marks the property satisfied
EXPECTED_PATTERNS = {
    "accuracy": (True, False, False),
    "acc_within_n": (True, False, False),
    "maac": (True, False, True),
    "cohen_kappa": (True, False, True),
    "macro_f1": (True, False, True),
    "mae": (False, True, False),
    "mse": (False, True, False),
    "macro_mae": (False, True, True),
    "macro_mse": (False, True, True),
    "weighted_kappa_linear": (False, True, True),
    "weighted_kappa_quadratic": (False, True, True),
    "cosine": (False, True, False),
    "pearson": (False, False, False),
    "spearman": (True, False, True),
    "kendall_tau_b": (True, False, True),
    "kendall_tau_a": (True, False, False),
    "mutual_information": (True, False, True),
    "purity": (True, False, True),
    "inverse_purity": (True, False, True),
    "cem_nom": (True, False, True),
    "cem_int": (False, True, True),
    "cem_ord": (True, True, True),
}


@dataclass(frozen=True)
class TransformSpec:
    """Strictly increasing map on class indices.

    For metrics that read class positions as numbers the map sends the scale
    into a larger index space (``num_classes`` grows, intervening classes stay
    empty). For label-only metrics the same map is a pure renaming and the
    index arrays are left untouched.
    """

    mapping: tuple[int, ...]
    description: str

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.mapping, self.mapping[1:])):
            raise ValueError(f"transform is not strictly increasing: {self.mapping}")

    @property
    def num_classes(self) -> int:
        return self.mapping[-1] + 1

    def apply(self, indices: np.ndarray) -> np.ndarray:
        return np.asarray(self.mapping, dtype=np.int64)[indices]

    def to_dict(self) -> dict:
        return {"mapping": list(self.mapping), "description": self.description}


@dataclass(frozen=True)
class Case:
    """One property instance: two systems scored against one gold standard.

    For invariance the second system is the transformed first one and is scored
    against the transformed gold standard.
    """

    source: str
    num_classes: int
    gold: tuple[int, ...]
    first: tuple[int, ...]
    second: tuple[int, ...]
    transform: TransformSpec | None = None
    params: tuple[tuple[str, object], ...] = ()

    def to_dict(self) -> dict:
        out = {
            "source": self.source,
            "num_classes": self.num_classes,
            "gold": list(self.gold),
            "system_before": list(self.first),
            "system_after": list(self.second),
        }
        if self.transform is not None:
            out["transform"] = self.transform.to_dict()
        if self.params:
            out["params"] = dict(self.params)
        return out


@dataclass(frozen=True)
class Counterexample:
    case: Case
    scores: tuple[float, float]

    def to_dict(self) -> dict:
        return {**self.case.to_dict(), "scores": list(self.scores)}


@dataclass(frozen=True)
class AuditVerdict:
    metric: str
    property: PropertyId
    trials: int
    violation: Counterexample | None = None
    skipped: int = 0
    probes: int = 0

    @property
    def verdict(self) -> str:
        return "ViolationFound" if self.violation is not None else "NoViolationFound"

    @property
    def satisfied(self) -> bool:
        return self.violation is None

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "property": self.property.value,
            "verdict": self.verdict,
            "trials": self.trials,
            "probes": self.probes,
            "skipped": self.skipped,
            "counterexample": None if self.violation is None else self.violation.to_dict(),
        }


# --- case evaluation -------------------------------------------------------


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=np.int64)


def evaluate_case(metric: str, prop: PropertyId, case: Case) -> tuple[float, float] | None:
    """Score both sides of a case; ``None`` when the metric is undefined on it."""
    spec = get_metric(metric)
    params = {k: v for k, v in case.params if k in spec.params}
    gold = _arr(case.gold)
    try:
        first = spec(_arr(case.first), gold, case.num_classes, **params)
        if prop is PropertyId.ORDINAL_INVARIANCE and spec.numeric:
            t = case.transform
            second = spec(t.apply(_arr(case.second)), t.apply(gold), t.num_classes, **params)
        else:
            second = spec(_arr(case.second), gold, case.num_classes, **params)
    except (PreconditionError, DegenerateInput):
        return None
    return first, second


def violates(prop: PropertyId, scores: tuple[float, float]) -> bool:
    first, second = scores
    if prop is PropertyId.ORDINAL_INVARIANCE:
        return abs(first - second) > TOLERANCE
    if prop is PropertyId.ORDINAL_MONOTONICITY:
        # second is the improved output and must score strictly higher
        return second - first <= TOLERANCE
    # imbalance: first moves an item out of the larger class and must score higher
    return first - second <= TOLERANCE


def replay(verdict: AuditVerdict) -> bool:
    """Re-evaluate a recorded counterexample; True iff it still violates."""
    if verdict.violation is None:
        return False
    scores = evaluate_case(verdict.metric, verdict.property, verdict.violation.case)
    return scores is not None and violates(verdict.property, scores)


# --- fixed probes ----------------------------------------------------------


def _cubic_plus_ten(num_classes: int) -> TransformSpec:
    f = [10 + (x + 1) ** 3 for x in range(num_classes)]
    return TransformSpec(tuple(v - f[0] for v in f), "f(x)=10+x^3 on 1-based class values")


def _ten_x_plus_x2(num_classes: int) -> TransformSpec:
    f = [10 * (x + 1) + (x + 1) ** 2 for x in range(num_classes)]
    return TransformSpec(tuple(v - f[0] for v in f), "f(x)=10x+x^2 on 1-based class values")


def probes(prop: PropertyId) -> list[Case]:
    """Fixed counterexample probes, classes 1..5 written as indices 0..4."""
    if prop is PropertyId.ORDINAL_INVARIANCE:
        return [
            Case("probe:fixed", 5, (2, 3, 4), (0, 1, 2), (0, 1, 2), _cubic_plus_ten(5)),
            Case("probe:10x+x^2", 3, (0, 1, 2), (0, 1, 1), (0, 1, 1), _ten_x_plus_x2(3)),
        ]
    if prop is PropertyId.ORDINAL_MONOTONICITY:
        return [Case("probe:fixed", 5, (2, 3, 4), (0, 1, 2), (1, 2, 3))]
    return [Case("probe:fixed", 3, (0, 0, 1, 2), (0, 1, 1, 2), (0, 0, 1, 1))]


# --- random generation -----------------------------------------------------

_PROP_CODE = {
    PropertyId.ORDINAL_INVARIANCE: 1,
    PropertyId.ORDINAL_MONOTONICITY: 2,
    PropertyId.IMBALANCE: 3,
}


def trial_rng(seed: int, prop: PropertyId, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, _PROP_CODE[prop], trial])


def random_gold(rng: np.random.Generator, allow_empty: bool = False, min_classes: int = MIN_CLASSES):
    """Skewed random gold standard; returns (gold indices, num_classes).

    Shapes alternate between Dirichlet-skewed, peaked and bimodal profiles.
    """
    c = int(rng.integers(min_classes, MAX_CLASSES + 1))
    n = int(rng.integers(max(MIN_ITEMS, c), MAX_ITEMS + 1))
    shape = rng.integers(3)
    x = np.arange(c)
    if shape == 0:
        probs = rng.dirichlet(np.full(c, 10 ** rng.uniform(-0.7, 0.5)))
    elif shape == 1:
        centre = rng.uniform(0, c - 1)
        probs = np.exp(-0.5 * ((x - centre) / rng.uniform(0.5, c / 2)) ** 2)
    else:
        width = rng.uniform(0.4, c / 4)
        lo, hi = rng.uniform(0, c / 3), rng.uniform(2 * c / 3, c - 1)
        probs = np.exp(-0.5 * ((x - lo) / width) ** 2) + rng.uniform(0.3, 1.5) * np.exp(
            -0.5 * ((x - hi) / width) ** 2
        )
    probs = probs / probs.sum()
    if allow_empty:
        counts = rng.multinomial(n, probs)
    else:
        counts = 1 + rng.multinomial(n - c, probs)
    gold = np.repeat(np.arange(c), counts)
    rng.shuffle(gold)
    return gold, c


def random_system(rng: np.random.Generator, gold: np.ndarray, c: int) -> np.ndarray:
    """Gold copy with a random fraction of items replaced by uniform or shifted labels."""
    s = gold.copy()
    wrong = rng.random(len(gold)) < rng.uniform(0.1, 0.9)
    uniform = rng.integers(0, c, size=len(gold))
    shifted = np.clip(gold + rng.choice([-2, -1, 1, 2], size=len(gold)), 0, c - 1)
    s[wrong] = np.where(rng.random(len(gold)) < 0.5, uniform, shifted)[wrong]
    return s


def random_transform(rng: np.random.Generator, c: int) -> TransformSpec:
    if rng.random() < 0.2:
        return _ten_x_plus_x2(c)
    gaps = rng.integers(1, 7, size=c - 1)
    return TransformSpec(tuple(int(v) for v in np.concatenate(([0], np.cumsum(gaps)))), "random increasing gaps")


def random_case(prop: PropertyId, seed: int, trial: int, allow_empty: bool = False) -> Case:
    """Random case for ``prop``; with ``allow_empty`` gold classes may be empty
    and metrics with an ``allow_empty`` switch are scored leniently."""
    case = _random_case(prop, seed, trial, allow_empty)
    if allow_empty:
        case = Case(case.source, case.num_classes, case.gold, case.first, case.second, case.transform,
                    (("allow_empty", True),))
    return case


def _random_case(prop: PropertyId, seed: int, trial: int, allow_empty: bool) -> Case:
    rng = trial_rng(seed, prop, trial)
    src = f"trial:{trial}"
    if prop is PropertyId.ORDINAL_INVARIANCE:
        gold, c = random_gold(rng, allow_empty)
        s = random_system(rng, gold, c)
        t = random_transform(rng, c)
        return Case(src, c, tuple(gold.tolist()), tuple(s.tolist()), tuple(s.tolist()), t)

    if prop is PropertyId.ORDINAL_MONOTONICITY:
        gold, c = random_gold(rng, allow_empty)
        s = random_system(rng, gold, c)
        wrong = np.flatnonzero(s != gold)
        if len(wrong) == 0:
            k = int(rng.integers(len(gold)))
            s[k] = gold[k] + 1 if gold[k] < c - 1 else gold[k] - 1
            wrong = np.array([k])
        moved = s.copy()
        single = rng.random() < 0.5
        picks = rng.choice(wrong, size=1 if single else int(rng.integers(1, min(4, len(wrong)) + 1)), replace=False)
        for k in picks:
            gap = int(moved[k] - gold[k])
            step = 1 if single else int(rng.integers(1, abs(gap) + 1))
            moved[k] -= np.sign(gap) * step
        return Case(src, c, tuple(gold.tolist()), tuple(s.tolist()), tuple(moved.tolist()))

    while True:
        gold, c = random_gold(rng, allow_empty)
        counts = np.bincount(gold, minlength=c)
        triples = [k for k in range(c - 2) if min(counts[k], counts[k + 2]) >= 1 and counts[k] != counts[k + 2]]
        if triples:
            break
    k = int(rng.choice(triples))
    c1, c2, c3 = (k, k + 1, k + 2) if counts[k] > counts[k + 2] else (k + 2, k + 1, k)
    d1 = int(rng.choice(np.flatnonzero(gold == c1)))
    d3 = int(rng.choice(np.flatnonzero(gold == c3)))
    first, second = gold.copy(), gold.copy()
    first[d1] = c2
    second[d3] = c2
    return Case(src, c, tuple(gold.tolist()), tuple(first.tolist()), tuple(second.tolist()))


# --- audit -----------------------------------------------------------------


def _scan(metrics: Sequence[str], prop: PropertyId, cases: Iterable[Case]):
    """First violation per metric over ``cases`` plus per-metric skip counts."""
    found: dict[str, Counterexample] = {}
    skipped = {m: 0 for m in metrics}
    evaluated = {m: 0 for m in metrics}
    for case in cases:
        active = [m for m in metrics if m not in found]
        if not active:
            break
        for m in active:
            scores = evaluate_case(m, prop, case)
            if scores is None:
                skipped[m] += 1
                continue
            evaluated[m] += 1
            if violates(prop, scores):
                found[m] = Counterexample(case, scores)
    return found, skipped, evaluated


def _scan_range(args):
    metrics, prop, seed, start, stop, allow_empty = args
    return _scan(metrics, prop, (random_case(prop, seed, t, allow_empty) for t in range(start, stop)))


def check_property(
    metrics: Sequence[str],
    prop: PropertyId,
    trials: int,
    seed: int,
    jobs: int = 1,
    allow_empty: bool = False,
) -> list[AuditVerdict]:
    """Run probes then ``trials`` random cases for each metric."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    metrics = [get_metric(m).id for m in metrics]
    fixed = probes(prop)
    found, p_skipped, p_evaluated = _scan(metrics, prop, fixed)
    remaining = [m for m in metrics if m not in found]
    skipped = dict(p_skipped)
    if remaining:
        if jobs <= 1:
            chunks = [_scan_range((remaining, prop, seed, 0, trials, allow_empty))]
        else:
            bounds = np.linspace(0, trials, jobs * 4 + 1).astype(int)
            tasks = [
                (remaining, prop, seed, int(a), int(b), allow_empty)
                for a, b in zip(bounds, bounds[1:])
                if b > a
            ]
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                chunks = list(pool.map(_scan_range, tasks))
        # chunks are in trial order; the earliest violating chunk wins
        for chunk_found, chunk_skipped, _ in chunks:
            for m in remaining:
                if m in found:
                    continue
                skipped[m] += chunk_skipped[m]
                if m in chunk_found:
                    found[m] = chunk_found[m]
    out = []
    for m in metrics:
        out.append(
            AuditVerdict(
                metric=m,
                property=prop,
                trials=trials,
                violation=found.get(m),
                skipped=skipped[m] if m not in found else 0,
                probes=len(fixed),
            )
        )
    return out


def check_invariance(metric: str, trials: int, seed: int) -> AuditVerdict:
    return check_property([metric], PropertyId.ORDINAL_INVARIANCE, trials, seed)[0]


def check_monotonicity(metric: str, trials: int, seed: int) -> AuditVerdict:
    return check_property([metric], PropertyId.ORDINAL_MONOTONICITY, trials, seed)[0]


def check_imbalance(metric: str, trials: int, seed: int) -> AuditVerdict:
    return check_property([metric], PropertyId.IMBALANCE, trials, seed)[0]


@dataclass
class AuditTable:
    trials: int
    seed: int
    verdicts: list[AuditVerdict] = field(default_factory=list)

    def pattern(self, metric: str) -> tuple[bool, ...]:
        by_prop = {v.property: v.satisfied for v in self.verdicts if v.metric == metric}
        return tuple(by_prop[p] for p in PROPERTIES)

    @property
    def metrics(self) -> list[str]:
        seen: list[str] = []
        for v in self.verdicts:
            if v.metric not in seen:
                seen.append(v.metric)
        return seen

    def pattern_mismatches(self) -> dict[str, tuple[tuple[bool, ...], tuple[bool, ...]]]:
        """Metrics whose verdict pattern differs from the reference table: id -> (found, expected)."""
        out = {}
        for m in self.metrics:
            if m in EXPECTED_PATTERNS and self.pattern(m) != EXPECTED_PATTERNS[m]:
                out[m] = (self.pattern(m), EXPECTED_PATTERNS[m])
        return out

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "tolerance": TOLERANCE,
            "note": "NoViolationFound means no violation in the fixed probes plus the stated number of random trials",
            "records": [v.to_dict() for v in self.verdicts],
        }

    def render(self) -> str:
        mark = {True: "ok", False: "-"}
        head = f"{'metric':<26}{'Ord.Inv.':>10}{'Ord.Mon.':>10}{'Imb.':>8}   expected"
        lines = [head, "-" * len(head)]
        for m in self.metrics:
            row = "".join(f"{mark[x]:>{w}}" for x, w in zip(self.pattern(m), (10, 10, 8)))
            exp = EXPECTED_PATTERNS.get(m)
            exp_s = " ".join(mark[x] for x in exp) if exp else "n/a"
            flag = "" if exp is None or exp == self.pattern(m) else "   MISMATCH"
            lines.append(f"{m:<26}{row}   {exp_s}{flag}")
        lines.append(f"({self.trials} random trials per cell plus fixed probes, seed {self.seed})")
        return "\n".join(lines)


def audit_all(metrics: Iterable[str], trials: int, seed: int, jobs: int = 1) -> AuditTable:
    metrics = [get_metric(m).id for m in metrics]
    table = AuditTable(trials, seed)
    if not metrics:
        return table
    by_prop = {p: check_property(metrics, p, trials, seed, jobs) for p in PROPERTIES}
    for m_pos in range(len(metrics)):
        for p in PROPERTIES:
            table.verdicts.append(by_prop[p][m_pos])
    return table


def diagnose_empty_classes(metrics: Sequence[str] = ("cem_ord",), trials: int = 10000, seed: int = 7,
                           jobs: int = 1) -> list[AuditVerdict]:
    """Monotonicity audit on gold standards that may leave classes empty.

    Ordinal CEM only promises strict monotonicity when every gold class is
    populated; here it is scored leniently so the failure is observable.
    """
    return check_property(metrics, PropertyId.ORDINAL_MONOTONICITY, trials, seed, jobs, allow_empty=True)


def default_metrics() -> list[str]:
    return [m.id for m in list_metrics()]
