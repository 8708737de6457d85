"""Comparison metrics behind a single registry.

All scoring functions take ``(sys_idx, gold_idx, num_classes)`` integer arrays.
Error metrics are negated on registration, so every registered score is
higher-is-better.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.stats import rankdata

from .cem import ScaleType, cem_arrays
from .core import LabeledDataset, confusion_counts
from .errors import DegenerateInput, UnknownMetric

ScoreFn = Callable[..., float]


def _confusion(s, g, c):
    return confusion_counts(s, g, c).astype(np.float64)


def accuracy(s, g, c):
    return float(np.mean(s == g))


def acc_within_n(s, g, c, n=1):
    return float(np.mean(np.abs(s - g) <= n))


def maac(s, g, c):
    """Mean per-gold-class recall over populated gold classes."""
    m = _confusion(s, g, c)
    gold = m.sum(axis=0)
    present = gold > 0
    return float(np.mean(np.diag(m)[present] / gold[present]))


def precision_recall(s, g, c):
    """Per-class precision and recall; NaN where the class has no items on that side."""
    m = _confusion(s, g, c)
    tp = np.diag(m)
    with np.errstate(invalid="ignore", divide="ignore"):
        return tp / m.sum(axis=1), tp / m.sum(axis=0)


def macro_f1(s, g, c):
    m = _confusion(s, g, c)
    tp = np.diag(m)
    pred = m.sum(axis=1)
    gold = m.sum(axis=0)
    present = (pred + gold) > 0
    # F1 = 2TP / (|pred| + |gold|), which is 0 when TP = 0
    return float(np.mean(2 * tp[present] / (pred[present] + gold[present])))


def cohen_kappa(s, g, c):
    m = _confusion(s, g, c)
    total = m.sum()
    po = np.trace(m) / total
    pe = float(m.sum(axis=1) @ m.sum(axis=0)) / total**2
    if pe >= 1.0:
        raise DegenerateInput("kappa undefined: both outputs use a single identical class")
    return float((po - pe) / (1 - pe))


def _weighted_kappa(s, g, c, power):
    m = _confusion(s, g, c)
    total = m.sum()
    idx = np.arange(c)
    disagreement = (np.abs(idx[:, None] - idx[None, :]) / (c - 1)) ** power
    expected = np.outer(m.sum(axis=1), m.sum(axis=0)) / total
    denom = float((disagreement * expected).sum())
    if denom <= 0:
        raise DegenerateInput("weighted kappa undefined: zero expected disagreement")
    return float(1 - (disagreement * m).sum() / denom)


def weighted_kappa_linear(s, g, c):
    return _weighted_kappa(s, g, c, 1)


def weighted_kappa_quadratic(s, g, c):
    return _weighted_kappa(s, g, c, 2)


def mae(s, g, c):
    return float(np.mean(np.abs(s - g)))


def mse(s, g, c):
    return float(np.mean((s - g) ** 2.0))


def _macro_error(s, g, c, power):
    err = np.abs(s - g).astype(np.float64) ** power
    per_class = np.bincount(g, weights=err, minlength=c)
    gold = np.bincount(g, minlength=c)
    present = gold > 0
    return float(np.mean(per_class[present] / gold[present]))


def macro_mae(s, g, c):
    return _macro_error(s, g, c, 1)


def macro_mse(s, g, c):
    return _macro_error(s, g, c, 2)


def _pearson(x, y, what):
    x = x - x.mean()
    y = y - y.mean()
    sxx = float(x @ x)
    syy = float(y @ y)
    if sxx <= 0 or syy <= 0:
        raise DegenerateInput(f"{what} undefined: constant input")
    return float(x @ y / np.sqrt(sxx * syy))


def pearson(s, g, c):
    return _pearson(s.astype(np.float64), g.astype(np.float64), "pearson")


def spearman(s, g, c):
    return _pearson(rankdata(s), rankdata(g), "spearman")


def _pair_counts(s, g, c):
    """Concordant, discordant, and tie counts over item pairs, from the confusion table."""
    m = _confusion(s, g, c)
    # below_right[a, b] = sum of m[a' > a, b' > b]; below_left for b' < b
    rev = m[::-1, ::-1].cumsum(axis=0).cumsum(axis=1)[::-1, ::-1]
    below_right = np.zeros_like(m)
    below_right[:-1, :-1] = rev[1:, 1:]
    lr = m[::-1, :].cumsum(axis=0)[::-1, :].cumsum(axis=1)
    below_left = np.zeros_like(m)
    below_left[:-1, 1:] = lr[1:, :-1]
    concordant = float((m * below_right).sum())
    discordant = float((m * below_left).sum())
    rows = m.sum(axis=1)
    cols = m.sum(axis=0)
    n = m.sum()
    pairs = n * (n - 1) / 2
    tied_s = float((rows * (rows - 1) / 2).sum())
    tied_g = float((cols * (cols - 1) / 2).sum())
    return concordant, discordant, pairs, tied_s, tied_g


def kendall_tau_a(s, g, c):
    con, dis, pairs, _, _ = _pair_counts(s, g, c)
    if pairs == 0:
        raise DegenerateInput("kendall tau undefined for fewer than 2 items")
    return (con - dis) / pairs


def kendall_tau_b(s, g, c):
    con, dis, pairs, tied_s, tied_g = _pair_counts(s, g, c)
    denom = (pairs - tied_s) * (pairs - tied_g)
    if denom <= 0:
        raise DegenerateInput("kendall tau-b undefined: constant input")
    return (con - dis) / float(np.sqrt(denom))


def mutual_information(s, g, c):
    """Mutual information in bits."""
    m = _confusion(s, g, c)
    p = m / m.sum()
    ps = p.sum(axis=1, keepdims=True)
    pg = p.sum(axis=0, keepdims=True)
    nz = p > 0
    return float((p[nz] * np.log2(p[nz] / (ps @ pg)[nz])).sum())


def purity(s, g, c):
    m = _confusion(s, g, c)
    return float(m.max(axis=1).sum() / m.sum())


def inverse_purity(s, g, c):
    m = _confusion(s, g, c)
    return float(m.max(axis=0).sum() / m.sum())


def cosine(s, g, c):
    x = s.astype(np.float64) + 1
    y = g.astype(np.float64) + 1
    return float(x @ y / np.sqrt((x @ x) * (y @ y)))


def cem_ord(s, g, c, allow_empty=False):
    return cem_arrays(ScaleType.ORD, s, g, c, allow_empty=allow_empty)


def cem_nom(s, g, c):
    return cem_arrays(ScaleType.NOM, s, g, c)


def cem_int(s, g, c):
    return cem_arrays(ScaleType.INT, s, g, c)


def cem_flat(s, g, c, allow_empty=False):
    return cem_arrays(ScaleType.ORD, s, g, c, flat=True, allow_empty=allow_empty)


@dataclass(frozen=True)
class MetricSpec:
    """A registered metric.

    ``numeric`` marks metrics that read class positions as numbers (differences,
    products, ranks of values); ``negated`` marks error metrics whose raw value
    is flipped so that higher is better.
    """

    id: str
    fn: ScoreFn
    negated: bool = False
    numeric: bool = False
    params: Mapping[str, object] = field(default_factory=dict)

    def __call__(self, s, g, c, **params) -> float:
        merged = {**self.params, **params}
        value = self.fn(s, g, c, **merged)
        return -value if self.negated else value

    def describe(self) -> dict:
        return {
            "id": self.id,
            "higher_is_better": True,
            "negated": self.negated,
            "numeric": self.numeric,
            "params": dict(self.params),
        }


_REGISTRY: dict[str, MetricSpec] = {}


def _register(spec: MetricSpec):
    _REGISTRY[spec.id] = spec


for _spec in (
    MetricSpec("accuracy", accuracy),
    MetricSpec("acc_within_n", acc_within_n, params={"n": 1}),
    MetricSpec("maac", maac),
    MetricSpec("macro_f1", macro_f1),
    MetricSpec("cohen_kappa", cohen_kappa),
    MetricSpec("weighted_kappa_linear", weighted_kappa_linear, numeric=True),
    MetricSpec("weighted_kappa_quadratic", weighted_kappa_quadratic, numeric=True),
    MetricSpec("mae", mae, negated=True, numeric=True),
    MetricSpec("mse", mse, negated=True, numeric=True),
    MetricSpec("macro_mae", macro_mae, negated=True, numeric=True),
    MetricSpec("macro_mse", macro_mse, negated=True, numeric=True),
    MetricSpec("pearson", pearson, numeric=True),
    MetricSpec("spearman", spearman, numeric=True),
    MetricSpec("kendall_tau_a", kendall_tau_a, numeric=True),
    MetricSpec("kendall_tau_b", kendall_tau_b, numeric=True),
    MetricSpec("mutual_information", mutual_information),
    MetricSpec("purity", purity),
    MetricSpec("inverse_purity", inverse_purity),
    MetricSpec("cosine", cosine, numeric=True),
    MetricSpec("cem_ord", cem_ord, params={"allow_empty": False}),
    MetricSpec("cem_nom", cem_nom),
    MetricSpec("cem_int", cem_int, numeric=True),
    MetricSpec("cem_flat", cem_flat, params={"allow_empty": False}),
):
    _register(_spec)

ALIASES = {
    "acc": "accuracy",
    "kendall_a": "kendall_tau_a",
    "kendall": "kendall_tau_a",
    "mi": "mutual_information",
    "f1": "macro_f1",
}


def list_metrics() -> list[MetricSpec]:
    return list(_REGISTRY.values())


def get_metric(metric_id: str) -> MetricSpec:
    key = ALIASES.get(metric_id, metric_id)
    try:
        return _REGISTRY[key]
    except KeyError:
        raise UnknownMetric(f"unknown metric id {metric_id!r}") from None


def resolve_metrics(ids) -> list[str]:
    """Expand ``all`` and aliases into canonical ids, keeping order, dropping repeats."""
    if isinstance(ids, str):
        ids = [part for part in ids.split(",") if part.strip()]
    out: list[str] = []
    for raw in ids:
        raw = raw.strip()
        names = [m.id for m in list_metrics()] if raw == "all" else [get_metric(raw).id]
        out.extend(n for n in names if n not in out)
    return out


def registry_fingerprint() -> str:
    blob = "|".join(
        f"{m.id}:{int(m.negated)}:{int(m.numeric)}:{sorted(m.params.items())}" for m in list_metrics()
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def score_arrays(metric: str, s: np.ndarray, g: np.ndarray, num_classes: int, params=None) -> float:
    return get_metric(metric)(s, g, num_classes, **(params or {}))


def score(metric: str, dataset: LabeledDataset, system: str, params: Mapping | None = None) -> float:
    """Score one system of ``dataset`` under ``metric`` (higher is better)."""
    return score_arrays(
        metric, dataset.system_indices(system), dataset.gold_indices, len(dataset.scale), params
    )
