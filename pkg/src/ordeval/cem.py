"""Closeness Evaluation Measure at ordinal, nominal and interval scale.

Every variant reduces to a table of event masses: ``mass[a, b]`` is the number
of gold items (with half-ties) that are at least as close to gold class ``b``
as the predicted class ``a`` is. The information quantity of that event,
``-log2(mass / N)``, is the per-item weight; CEM is the weighted sum over items
normalised by the perfect-output sum.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import GoldDistribution, LabeledDataset, OrdinalScale, confusion_counts, gold_distribution
from .errors import EmptyDistribution, EmptyGoldClass, UndefinedCIQ

TIE_CONVENTION = "half"


class ScaleType(enum.Enum):
    ORD = "ORD"
    NOM = "NOM"
    INT = "INT"


def event_masses(scale_type: ScaleType, counts: np.ndarray) -> np.ndarray:
    """Mass of the closeness event for every (system class, gold class) pair."""
    n = np.asarray(counts, dtype=np.float64)
    size = len(n)
    a = np.arange(size)[:, None]
    b = np.arange(size)[None, :]
    if scale_type is ScaleType.ORD:
        cum = np.concatenate(([0.0], np.cumsum(n)))
        # a < b: half of a, everything in (a, b]; a > b: everything in [b, a), half of a
        above = cum[b + 1] - cum[a + 1]
        below = cum[a] - cum[b]
        between = np.where(a < b, above, np.where(a > b, below, 0.0))
        return n[a] / 2 + between
    if scale_type is ScaleType.NOM:
        total = n.sum()
        return np.where(a == b, n[b] / 2, total) + np.zeros((size, size))
    if scale_type is ScaleType.INT:
        cum = np.concatenate(([0.0], np.cumsum(n)))
        padded = np.concatenate((n, [0.0]))  # index `size` reads as an empty class
        r = np.abs(a - b)
        lo = np.clip(b - r + 1, 0, size)
        hi = np.clip(b + r, 0, size)  # exclusive
        inside = np.where(r > 0, cum[hi] - cum[lo], 0.0)
        left = np.where(b - r >= 0, b - r, size)
        right = np.where((b + r < size) & (r > 0), b + r, size)
        shell = padded[left] + padded[right]
        return inside + shell / 2
    raise ValueError(f"unknown scale type {scale_type!r}")


def _weights(masses: np.ndarray, total: float, flat: bool) -> np.ndarray:
    prob = masses / total
    if flat:
        return 1.0 - prob
    with np.errstate(divide="ignore"):
        return -np.log2(prob)


@dataclass(frozen=True)
class ProximityTable:
    """``prox[i, j]``: informational proximity of system class i to gold class j."""

    scale: OrdinalScale | None
    prox: np.ndarray
    source: GoldDistribution

    def __getitem__(self, key):
        return self.prox[key]

    def weight(self, system_label: str, gold_label: str) -> float:
        return float(self.prox[self.scale.index(system_label), self.scale.index(gold_label)])


def build_prox_table(dist: GoldDistribution, scale: OrdinalScale | None = None) -> ProximityTable:
    """Ordinal proximity table; cells with zero event mass hold ``inf``."""
    if dist.total < 1:
        raise EmptyDistribution("gold distribution has no items")
    masses = event_masses(ScaleType.ORD, dist.as_array())
    return ProximityTable(scale, _weights(masses, dist.total, flat=False), dist)


def ciq(scale_type: ScaleType, dist: GoldDistribution, a: int, b: int) -> float:
    """Closeness information quantity of predicting class ``a`` for gold class ``b``."""
    if dist.total < 1:
        raise EmptyDistribution("gold distribution has no items")
    size = len(dist.counts)
    if not (0 <= a < size and 0 <= b < size):
        raise IndexError(f"class indices ({a}, {b}) out of range for {size} classes")
    mass = event_masses(scale_type, dist.as_array())[a, b]
    if mass <= 0:
        raise UndefinedCIQ(f"closeness event for ({a}, {b}) has probability 0")
    return float(-np.log2(mass / dist.total))


def cem_arrays(
    scale_type: ScaleType,
    sys_idx: np.ndarray,
    gold_idx: np.ndarray,
    num_classes: int,
    flat: bool = False,
    allow_empty: bool = False,
) -> float:
    """CEM over class-index arrays.

    At ordinal scale an empty gold class is refused unless ``allow_empty`` is
    set; scored pairs never touch a zero-mass cell, so the lenient value is
    well defined but loses the strict monotonicity guarantee.
    """
    if len(gold_idx) == 0:
        raise EmptyDistribution("no items to score")
    counts = np.bincount(gold_idx, minlength=num_classes)
    if scale_type is ScaleType.ORD and not allow_empty and (counts == 0).any():
        empty = np.flatnonzero(counts == 0).tolist()
        raise EmptyGoldClass(f"ordinal CEM needs every gold class populated; empty: {empty}")
    weights = _weights(event_masses(scale_type, counts), len(gold_idx), flat)
    confusion = confusion_counts(sys_idx, gold_idx, num_classes)
    used = confusion > 0
    if not np.isfinite(weights[used]).all():
        raise UndefinedCIQ("a scored pair has a zero-probability closeness event")
    numerator = float((confusion[used] * weights[used]).sum())
    # self-class weights are strictly positive for populated classes
    present = counts > 0
    denominator = float((counts[present] * np.diag(weights)[present]).sum())
    return numerator / denominator


def cem(scale_type: ScaleType, dataset: LabeledDataset, system: str, allow_empty: bool = False) -> float:
    return cem_arrays(
        scale_type,
        dataset.system_indices(system),
        dataset.gold_indices,
        len(dataset.scale),
        allow_empty=allow_empty,
    )


def cem_flat(dataset: LabeledDataset, system: str, allow_empty: bool = False) -> float:
    """Ordinal CEM with ``1 - P`` in place of ``-log2 P``."""
    return cem_arrays(
        ScaleType.ORD,
        dataset.system_indices(system),
        dataset.gold_indices,
        len(dataset.scale),
        flat=True,
        allow_empty=allow_empty,
    )


def nominal_class_scores(dataset: LabeledDataset, system: str) -> dict[str, tuple[float | None, float | None]]:
    """Per-class nominal CIQ sums over system-side and gold-side items, each
    divided by its attainable maximum.

    Under a uniform gold distribution these coincide with precision and recall.
    A side with no items maps to ``None``.
    """
    dist = gold_distribution(dataset)
    size = len(dataset.scale)
    masses = event_masses(ScaleType.NOM, dist.as_array())
    with np.errstate(divide="ignore"):
        weights = -np.log2(masses / dist.total)
    sys_idx = dataset.system_indices(system)
    gold_idx = dataset.gold_indices
    per_item = weights[sys_idx, gold_idx]
    out = {}
    for c in range(size):
        on_sys = sys_idx == c
        on_gold = gold_idx == c
        pre = rec = None
        if on_sys.any() and np.isfinite(weights[c, c]):
            pre = float(per_item[on_sys].sum() / (on_sys.sum() * weights[c, c]))
        if on_gold.any():
            rec = float(per_item[on_gold].sum() / (on_gold.sum() * weights[c, c]))
        out[dataset.scale.classes[c]] = (pre, rec)
    return out
