"""Declarative experiment configuration (YAML) shared by the CLI commands."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .augment import AugmentSpec
from .dataio import ActivityType, DatasetManifest, Sequence, SyntheticSpec, generate_synthetic, load_dataset
from .eval.experiment import ExperimentSetup
from .eval.folds import FoldPlan, Scheme, make_lsio, make_loso, make_lsso
from .labelfuse import Granularity
from .model.network import ModelConfig
from .model.train import TrainConfig
from .rng import derive_seed
from .windowing import InstanceKey, Padding, iter_instances, multi_length_plan

OUTPUT_ENV = "PBDETECT_OUTPUT_DIR"
DEFAULT_OUTPUT = "pbdetect-out"


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


def _build(cls, data: Any, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    manifest: str | None = None
    synthetic: SyntheticSpec | None = None
    window_lengths_s: tuple[float, ...] = (3.0,)
    overlap: float = 0.75
    padding: Padding = Padding.ZERO
    augment: AugmentSpec | None = field(default_factory=AugmentSpec)
    labels: Granularity = Granularity()
    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    scheme: Scheme = Scheme.LOSO
    lsso_folds: int = 6
    lsio_test_fraction: float = 0.2
    activity: ActivityType | None = None
    output_dir: str | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.manifest is not None and self.synthetic is not None:
            raise ConfigError("give either a dataset manifest or a synthetic spec, not both")
        if not self.window_lengths_s:
            raise ConfigError("need at least one window length")
        if not 0.0 <= self.overlap < 1.0:
            raise ConfigError("overlap must lie in [0, 1)")

    @classmethod
    def from_dict(cls, d: dict | None) -> "ExperimentConfig":
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys {unknown}")
        kw: dict[str, Any] = {}
        try:
            if d.get("manifest") is not None:
                kw["manifest"] = str(d["manifest"])
            if d.get("synthetic") is not None:
                syn = d["synthetic"]
                kw["synthetic"] = SyntheticSpec() if syn is True else _build(SyntheticSpec, syn, "synthetic")
            if "window_lengths_s" in d:
                v = d["window_lengths_s"]
                kw["window_lengths_s"] = tuple(float(x) for x in (v if isinstance(v, list) else [v]))
            for key in ("overlap", "lsio_test_fraction"):
                if key in d:
                    kw[key] = float(d[key])
            for key in ("lsso_folds", "seed"):
                if key in d:
                    kw[key] = int(d[key])
            if "padding" in d:
                kw["padding"] = Padding.parse(d["padding"])
            if "augment" in d:
                aug = d["augment"]
                if aug is None or aug is False:
                    kw["augment"] = None
                else:
                    aug = dict(aug)
                    if "methods" in aug:
                        aug["methods"] = frozenset(aug["methods"])
                    kw["augment"] = _build(AugmentSpec, aug, "augment")
            if "labels" in d:
                kw["labels"] = Granularity.parse(str(d["labels"]))
            if "model" in d:
                kw["model"] = _build(ModelConfig, d["model"], "model")
            if "train" in d:
                kw["train"] = _build(TrainConfig, d["train"], "train")
            if "scheme" in d:
                kw["scheme"] = Scheme.parse(d["scheme"])
            if d.get("activity") is not None:
                kw["activity"] = ActivityType.parse(d["activity"])
            if d.get("output_dir") is not None:
                kw["output_dir"] = str(d["output_dir"])
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cls(**kw)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if data is not None and not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls.from_dict(data)

    def override(self, **changes) -> "ExperimentConfig":
        """Flags win over the file; ``None`` means "not given"."""
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes) if changes else self

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)

    def data_source(self) -> dict:
        if self.manifest is not None:
            return {"manifest": str(self.manifest)}
        spec = self.synthetic or SyntheticSpec()
        return {"synthetic": asdict(spec)}

    def load_sequences(self) -> list[Sequence]:
        if self.manifest is not None:
            return load_dataset(DatasetManifest.read(self.manifest))
        return generate_synthetic(self.synthetic or SyntheticSpec()).sequences

    def window_specs(self, lengths: tuple[float, ...] | None = None):
        return multi_length_plan(lengths or self.window_lengths_s, self.overlap, self.padding)

    def setup(self, lengths: tuple[float, ...] | None = None) -> ExperimentSetup:
        return ExperimentSetup(
            windows=tuple(self.window_specs(lengths)),
            augment=self.augment,
            granularity=self.labels,
            model=self.model,
            train=self.train,
            activity=self.activity,
            seed=self.seed,
        )

    def plan(self, sequences: list[Sequence]) -> FoldPlan:
        seed = derive_seed(self.seed, "plan")
        if self.scheme == Scheme.LOSO:
            return make_loso(sorted({s.subject_id for s in sequences}))
        if self.scheme == Scheme.LSSO:
            roster = sorted({(s.subject_id, s.cohort) for s in sequences})
            return make_lsso(roster, self.lsso_folds, seed)
        keys: list[InstanceKey] = [
            key
            for key, seq, k in iter_instances(sequences)
            if self.activity is None or seq.activities[k].activity == self.activity
        ]
        return make_lsio(keys, self.lsio_test_fraction, seed)
