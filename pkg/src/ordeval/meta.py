"""Meta-evaluation: Unanimous Improvement Ratio, Coverage and robustness."""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .baselines import get_metric
from .core import LabeledDataset, OrdinalScale, load_dataset
from .errors import DegenerateInput, InputError, PreconditionError, UndefinedScore
from .synth import family_of

log = logging.getLogger(__name__)

DEFAULT_REFERENCE = ("accuracy", "kendall_tau_a", "mutual_information")

# synthetic gold standards routinely leave outer classes empty; scored pairs
# never touch a zero-mass cell, so CEM is computed over the full scale
DEFAULT_METRIC_PARAMS = {"cem_ord": {"allow_empty": True}, "cem_flat": {"allow_empty": True}}


@dataclass(frozen=True)
class MetaConfig:
    reference_metrics: tuple[str, ...] = DEFAULT_REFERENCE
    evaluated_metrics: tuple[str, ...] = ()
    test_case_ids: tuple[str, ...] | None = None
    metric_params: dict[str, dict] = field(default_factory=lambda: dict(DEFAULT_METRIC_PARAMS))

    def __post_init__(self):
        if not self.reference_metrics:
            raise InputError("reference metric set must be nonempty")
        object.__setattr__(self, "reference_metrics", tuple(get_metric(m).id for m in self.reference_metrics))
        object.__setattr__(self, "evaluated_metrics", tuple(get_metric(m).id for m in self.evaluated_metrics))


@dataclass
class ScoreCube:
    """``values[system, case, metric]``; NaN marks an undefined cell."""

    systems: list[str]
    cases: list[str]
    metrics: list[str]
    values: np.ndarray

    def metric_index(self, metric: str) -> int:
        return self.metrics.index(get_metric(metric).id)

    def system_index(self, system: str) -> int:
        return self.systems.index(system)

    def undefined_counts(self) -> dict[str, int]:
        return {m: int(np.isnan(self.values[:, :, k]).sum()) for k, m in enumerate(self.metrics)}

    def filled(self) -> "ScoreCube":
        """Undefined cells scored as 0 effectiveness."""
        return ScoreCube(self.systems, self.cases, self.metrics, np.nan_to_num(self.values, nan=0.0))

    def subset(self, systems: Sequence[str]) -> "ScoreCube":
        rows = [self.system_index(s) for s in systems]
        return ScoreCube(list(systems), self.cases, self.metrics, self.values[rows])


def _score_case(args):
    gold, systems, num_classes, metrics, params = args
    out = np.full((len(systems), len(metrics)), np.nan)
    specs = [get_metric(m) for m in metrics]
    for i, s in enumerate(systems):
        for k, spec in enumerate(specs):
            try:
                out[i, k] = spec(s, gold, num_classes, **params.get(spec.id, {}))
            except (DegenerateInput, PreconditionError):
                pass
    return out


def build_cube(
    datasets: Sequence[LabeledDataset],
    metrics: Sequence[str],
    jobs: int = 1,
    params: dict[str, dict] | None = None,
) -> ScoreCube:
    """Score every system of every dataset; all datasets must share systems and scale."""
    if not datasets:
        raise InputError("no test cases")
    metrics = [get_metric(m).id for m in metrics]
    systems = list(datasets[0].systems)
    for ds in datasets:
        if list(ds.systems) != systems:
            raise InputError(f"test case {ds.name!r} does not have the same systems as {datasets[0].name!r}")
    tasks = [
        (ds.gold_indices, [ds.system_indices(s) for s in systems], len(ds.scale), metrics, params or {})
        for ds in datasets
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_case = list(pool.map(_score_case, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        per_case = [_score_case(t) for t in tasks]
    values = np.stack(per_case, axis=1)  # [system, case, metric]
    return ScoreCube(systems, [ds.name for ds in datasets], metrics, values)


def _reference_block(cube: ScoreCube, reference: Sequence[str]) -> np.ndarray:
    block = cube.values[:, :, [cube.metric_index(m) for m in reference]]
    if np.isnan(block).any():
        raise UndefinedScore("reference metric has undefined cells; fill them first")
    return block


def uir(cube: ScoreCube, s: str, s_prime: str, reference: Sequence[str]) -> float:
    block = _reference_block(cube, reference)
    a = block[cube.system_index(s)]
    b = block[cube.system_index(s_prime)]
    wins = int(np.all(a >= b, axis=1).sum())
    losses = int(np.all(b >= a, axis=1).sum())
    return (wins - losses) / len(cube.cases)


def uir_matrix(cube: ScoreCube, reference: Sequence[str]) -> np.ndarray:
    """``out[i, j] = uir(system_i, system_j)`` for all system pairs."""
    block = _reference_block(cube, reference)  # [sys, case, ref]
    ge = np.all(block[:, None] >= block[None, :], axis=3).sum(axis=2)
    return (ge - ge.T) / len(cube.cases)


def spearman(x: np.ndarray, y: np.ndarray) -> float:
    """Spearman correlation with average ranks for ties."""
    rx = rankdata(x)
    ry = rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    sxx, syy = float(rx @ rx), float(ry @ ry)
    if sxx == 0 or syy == 0:
        raise DegenerateInput("spearman undefined: constant series")
    return float(rx @ ry / np.sqrt(sxx * syy))


def coverage(cube: ScoreCube, m: str, reference: Sequence[str], uirs: np.ndarray | None = None) -> float:
    """Spearman between per-pair mean score differences under ``m`` and UIR."""
    if len(cube.systems) < 2:
        raise InputError("coverage needs at least 2 systems")
    if uirs is None:
        uirs = uir_matrix(cube, reference)
    means = cube.values[:, :, cube.metric_index(m)].mean(axis=1)
    if np.isnan(means).any():
        raise UndefinedScore(f"metric {m!r} has undefined cells; fill them first")
    i, j = np.triu_indices(len(cube.systems), k=1)
    diffs = means[i] - means[j]
    # snap rounding noise so that mathematically tied differences stay tied
    scale = float(np.abs(means).max()) or 1.0
    diffs = np.round(diffs / scale, 9)
    return spearman(diffs, uirs[i, j])


def robustness(cube: ScoreCube, m: str) -> float:
    """Mean Spearman correlation between per-case system rankings over all case pairs."""
    if len(cube.cases) < 2 or len(cube.systems) < 2:
        raise InputError("robustness needs at least 2 test cases and 2 systems")
    scores = cube.values[:, :, cube.metric_index(m)]
    if np.isnan(scores).any():
        raise UndefinedScore(f"metric {m!r} has undefined cells; fill them first")
    ranks = rankdata(scores, axis=0)
    ranks -= ranks.mean(axis=0)
    norms = np.sqrt((ranks**2).sum(axis=0))
    if (norms == 0).any():
        raise DegenerateInput(f"metric {m!r} ranks all systems equally in some test case")
    corr = (ranks.T @ ranks) / np.outer(norms, norms)
    a, b = np.triu_indices(len(cube.cases), k=1)
    return float(corr[a, b].mean())


def _case_key(path: Path):
    m = re.search(r"(\d+)$", path.name)
    return (int(m.group(1)) if m else -1, path.name)


def load_suite(directory: str | Path, scale: OrdinalScale | None = None) -> list[LabeledDataset]:
    """Load ``case_<k>/gold.tsv`` plus ``case_<k>/sys_*.tsv`` for every case directory."""
    directory = Path(directory)
    manifest = directory / "manifest.json"
    if scale is None:
        if not manifest.exists():
            raise InputError(f"{directory}: no manifest.json; pass the class scale explicitly")
        scale = OrdinalScale(tuple(json.loads(manifest.read_text(encoding="utf-8"))["classes"]))
    case_dirs = sorted((p for p in directory.iterdir() if p.is_dir() and (p / "gold.tsv").exists()), key=_case_key)
    if not case_dirs:
        raise InputError(f"{directory}: no case directories with gold.tsv")
    datasets = []
    for case_dir in case_dirs:
        sys_files = sorted(case_dir.glob("sys_*.tsv"))
        systems = {p.stem[len("sys_"):]: p for p in sys_files}
        datasets.append(load_dataset(case_dir / "gold.tsv", systems, scale, name=case_dir.name))
    if manifest.exists():
        order = json.loads(manifest.read_text(encoding="utf-8")).get("systems")
        if order and set(order) == set(datasets[0].systems):
            datasets = [
                LabeledDataset(ds.scale, ds.items, {k: ds.systems[k] for k in order}, ds.name) for ds in datasets
            ]
    return datasets


@dataclass
class MetaReport:
    reference: list[str]
    metrics: list[str]
    columns: list[str]
    coverage: dict[str, dict[str, float | None]]
    robustness: dict[str, float | None]
    undefined_cells: dict[str, int]
    num_cases: int
    num_systems: int
    warnings: list[str] = field(default_factory=list)
    metric_params: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "reference": self.reference,
            "metrics": self.metrics,
            "aggregation": "mean of per-case scores",
            "pairs": "unordered system pairs in canonical index order",
            "undefined_cell_rule": "scored as 0 effectiveness",
            "metric_params": self.metric_params,
            "undefined_cells": self.undefined_cells,
            "test_cases": self.num_cases,
            "systems": self.num_systems,
            "columns": self.columns,
            "coverage": self.coverage,
            "robustness": self.robustness,
            "warnings": self.warnings,
        }

    def render(self) -> str:
        def fmt(v):
            return "   n/a" if v is None else f"{v:6.2f}"

        width = max([len(m) for m in self.metrics] + [6])
        cols = self.columns + ["robust"]
        lines = [" " * width + "".join(f"{c:>{max(len(c), 6) + 2}}" for c in cols)]
        for m in self.metrics:
            cells = [self.coverage[m][c] for c in self.columns] + [self.robustness[m]]
            lines.append(f"{m:<{width}}" + "".join(f"{fmt(v):>{max(len(c), 6) + 2}}" for v, c in zip(cells, cols)))
        lines.append(f"reference: {', '.join(self.reference)}; {self.num_cases} test cases, {self.num_systems} systems")
        return "\n".join(lines)


def metaeval_cube(cube: ScoreCube, config: MetaConfig) -> MetaReport:
    reference = list(config.reference_metrics)
    evaluated = list(config.evaluated_metrics) or list(reference)
    undefined = cube.undefined_counts()
    warnings = [
        f"{m}: {n} undefined cells scored as 0" for m, n in undefined.items() if n and m in set(evaluated) | set(reference)
    ]
    for w in warnings:
        log.warning(w)
    cube = cube.filled()

    families: list[str] = []
    for s in cube.systems:
        if family_of(s) not in families:
            families.append(family_of(s))
    views = {"all": cube}
    if len(families) > 1:
        for fam in families:
            views[f"minus_{fam}"] = cube.subset([s for s in cube.systems if family_of(s) != fam])

    cov: dict[str, dict[str, float | None]] = {m: {} for m in evaluated}
    for col, view in views.items():
        uirs = uir_matrix(view, reference)
        for m in evaluated:
            try:
                cov[m][col] = coverage(view, m, reference, uirs)
            except DegenerateInput as exc:
                warnings.append(f"{m} / {col}: {exc}")
                cov[m][col] = None
    rob: dict[str, float | None] = {}
    for m in evaluated:
        try:
            rob[m] = robustness(cube, m)
        except (DegenerateInput, InputError) as exc:
            warnings.append(f"{m} robustness: {exc}")
            rob[m] = None
    return MetaReport(
        reference, evaluated, list(views), cov, rob,
        {m: undefined[m] for m in cube.metrics}, len(cube.cases), len(cube.systems), warnings,
        {m: p for m, p in config.metric_params.items() if m in cube.metrics},
    )


def metaeval(
    datasets: str | Path | Sequence[LabeledDataset],
    config: MetaConfig,
    scale: OrdinalScale | None = None,
    jobs: int = 1,
) -> MetaReport:
    if isinstance(datasets, (str, Path)):
        datasets = load_suite(datasets, scale)
    if config.test_case_ids is not None:
        wanted = set(config.test_case_ids)
        datasets = [ds for ds in datasets if ds.name in wanted]
    evaluated = list(config.evaluated_metrics) or list(config.reference_metrics)
    needed = list(config.reference_metrics) + [m for m in evaluated if m not in config.reference_metrics]
    cube = build_cube(datasets, needed, jobs, config.metric_params)
    return metaeval_cube(cube, config)
