"""Synthetic gold standards and system outputs with controlled error types."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import write_tsv

DEFAULT_SEED = 7


class ErrorModel(enum.Enum):
    MAJORITY = "maj"
    RANDOM = "rand"
    TAG_DISPLACEMENT = "tdisp"
    ORDINAL_DISPLACEMENT = "odisp"
    PROXIMITY = "prox"


_MODEL_CODE = {m: k for k, m in enumerate(ErrorModel, start=1)}


def default_ratios() -> tuple[float, ...]:
    return tuple(round(0.1 * k, 10) for k in range(1, 11))


@dataclass(frozen=True)
class SynthConfig:
    test_cases: int = 100
    docs_per_case: int = 200
    num_classes: int = 11
    gold_mean: float = 4.0
    sigma_range: tuple[float, float] = (1.0, 3.0)
    error_ratios: tuple[float, ...] = field(default_factory=default_ratios)
    models: tuple[ErrorModel, ...] = tuple(ErrorModel)
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        object.__setattr__(self, "sigma_range", tuple(float(x) for x in self.sigma_range))
        object.__setattr__(self, "error_ratios", tuple(float(r) for r in self.error_ratios))
        object.__setattr__(self, "models", tuple(ErrorModel(m) for m in self.models))
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.test_cases < 1 or self.docs_per_case < 1:
            raise ValueError("test_cases and docs_per_case must be positive")
        if not all(0 < r <= 1 for r in self.error_ratios):
            raise ValueError("error ratios must lie in (0, 1]")
        low, high = self.sigma_range
        if low > high or low <= 0:
            raise ValueError("sigma_range must satisfy 0 < low <= high")

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(str(k) for k in range(1, self.num_classes + 1))

    @property
    def majority_class(self) -> int:
        return int(min(max(round(self.gold_mean), 1), self.num_classes))

    def sigma(self, case_index: int) -> float:
        low, high = self.sigma_range
        if self.test_cases == 1:
            return low
        return low + case_index * (high - low) / (self.test_cases - 1)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sigma_range"] = list(self.sigma_range)
        out["error_ratios"] = list(self.error_ratios)
        out["models"] = [m.value for m in self.models]
        return out


def gold_rng(seed: int, case_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, case_index, 0])


def system_seed(seed: int, case_index: int, model: ErrorModel, ratio_index: int) -> list[int]:
    return [seed, case_index, _MODEL_CODE[model], ratio_index]


def generate_gold(config: SynthConfig, case_index: int) -> np.ndarray:
    """Class values in ``1..num_classes`` drawn from a clamped, rounded normal."""
    if not 0 <= case_index < config.test_cases:
        raise IndexError(f"case_index {case_index} out of range")
    rng = gold_rng(config.seed, case_index)
    raw = rng.normal(config.gold_mean, config.sigma(case_index), size=config.docs_per_case)
    return np.clip(np.rint(raw), 1, config.num_classes).astype(np.int64)


def num_mistakes(n: int, r: float) -> int:
    # guard against 0.3 * 200 = 59.999...
    return int(math.floor(r * n + 1e-9))


def generate_system(
    gold: Sequence[int],
    model: ErrorModel,
    r: float,
    seed,
    num_classes: int = 11,
    majority: int = 4,
) -> np.ndarray:
    """Copy of ``gold`` with ``floor(r * n)`` randomly chosen items given the model's mistake."""
    if not 0 < r <= 1:
        raise ValueError("r must lie in (0, 1]")
    model = ErrorModel(model)
    gold = np.asarray(gold, dtype=np.int64)
    n = len(gold)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(n, size=num_mistakes(n, r), replace=False)
    out = gold.copy()
    if len(chosen) == 0:
        return out
    if model is ErrorModel.MAJORITY:
        out[chosen] = majority
    elif model is ErrorModel.RANDOM:
        out[chosen] = rng.integers(1, num_classes + 1, size=len(chosen))
    elif model is ErrorModel.TAG_DISPLACEMENT:
        out[chosen] = np.minimum(gold[chosen] + 1, num_classes)
    else:
        order = np.argsort(gold, kind="stable")
        position = np.empty(n, dtype=np.int64)
        position[order] = np.arange(n)
        if model is ErrorModel.ORDINAL_DISPLACEMENT:
            target = np.minimum(position[chosen] + n // 10, n - 1)
        else:
            # 1-based positions: floor((ord + rPos) / 2), rPos ~ U{1..n}
            r_pos = rng.integers(1, n + 1, size=len(chosen))
            target = (position[chosen] + 1 + r_pos) // 2 - 1
        out[chosen] = gold[order[target]]
    return out


def system_name(model: ErrorModel, r: float) -> str:
    return f"{ErrorModel(model).value}_{r:g}"


def family_of(system: str) -> str:
    return system.rsplit("_", 1)[0] if "_" in system else system


def generate_case(config: SynthConfig, case_index: int) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    gold = generate_gold(config, case_index)
    systems = {}
    for model in config.models:
        for k, r in enumerate(config.error_ratios):
            systems[system_name(model, r)] = generate_system(
                gold,
                model,
                r,
                system_seed(config.seed, case_index, model, k),
                config.num_classes,
                config.majority_class,
            )
    return gold, systems


def generate_suite(config: SynthConfig, out_dir: str | Path) -> Path:
    """Write ``case_<k>/gold.tsv``, ``case_<k>/sys_<model>_<r>.tsv`` and ``manifest.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ids = [f"d{i:04d}" for i in range(config.docs_per_case)]
    names: list[str] = []
    for case in range(config.test_cases):
        gold, systems = generate_case(config, case)
        case_dir = out_dir / f"case_{case}"
        case_dir.mkdir(exist_ok=True)
        write_tsv(case_dir / "gold.tsv", zip(ids, map(str, gold.tolist())))
        for name, preds in systems.items():
            write_tsv(case_dir / f"sys_{name}.tsv", zip(ids, map(str, preds.tolist())))
        names = list(systems)
    manifest = {
        "format": "ordeval-synth/1",
        "config": config.to_dict(),
        "seed": config.seed,
        "classes": list(config.classes),
        "cases": [f"case_{k}" for k in range(config.test_cases)],
        "systems": names,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return out_dir
