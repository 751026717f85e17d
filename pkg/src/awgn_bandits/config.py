"""Experiment configuration: a flat YAML mapping validated against ``config_schema.json``."""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from .core import (
    BanditInstance,
    deterministic_hard_instance,
    deterministic_instance,
    gap_instance,
    gaussian_instance,
    rademacher_instance,
)
from .infotheory import DEFAULT_C1, DEFAULT_C2, lower_bound_gap
from .link import DEFAULT_SNR_MAX, ChannelParams
from .policies import Algorithm, Schedule, build_schedule

INSTANCE_KINDS = ("gap", "gaussian", "rademacher", "deterministic", "hard")
SWEEP_AXES = ("sweep_snr", "sweep_b", "sweep_horizon")


class ConfigError(ValueError):
    pass


def schema() -> dict:
    text = resources.files("awgn_bandits").joinpath("config_schema.json").read_text()
    return json.loads(text)


@dataclass
class ExperimentConfig:
    instance: str = "gap"
    k: int = 2
    means: list[float] | None = None
    delta: float | None = None
    good_arm: int = 0
    b: float | None = None
    algorithm: str = "ucb0"
    horizon: int = 1000
    replications: int = 10
    seed: int = 0
    snr: float | None = None
    power: float = 1.0
    noise_variance: float | None = None
    snr_max: float = DEFAULT_SNR_MAX
    out: str = "results"
    audit_tol: float = 0.1
    retain_full_transcript: bool = False
    parallel: int = 1
    c1: float = DEFAULT_C1
    c2: float = DEFAULT_C2
    sweep_snr: list[float] | None = None
    sweep_b: list[float] | None = None
    sweep_horizon: list[int] | None = None

    # --- serialisation ---

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data or {})
        if isinstance(data.get("algorithm"), str):
            try:
                data["algorithm"] = Algorithm.parse(data["algorithm"]).value
            except ValueError as exc:
                raise ConfigError(f"algorithm: {exc}") from None
        try:
            jsonschema.validate(data, schema())
        except jsonschema.ValidationError as exc:
            where = ".".join(str(p) for p in exc.absolute_path) or "config"
            raise ConfigError(f"{where}: {exc.message}") from None
        return cls(**data)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from None
        if data is not None and not isinstance(data, dict):
            raise ConfigError("config must be a flat key: value mapping")
        return cls.from_dict(data or {})

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
        return cls.loads(text)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    # --- derived objects ---

    @property
    def bound_b(self) -> float:
        if self.b is not None:
            return float(self.b)
        if self.instance == "gaussian" and self.means:
            return max(1.0, math.sqrt(max(m * m for m in self.means) + 1.0))
        return 1.0

    def build_channel(self) -> ChannelParams:
        if self.snr is not None and self.noise_variance is not None:
            raise ConfigError("give either snr or noise_variance, not both")
        try:
            if self.snr is not None:
                return ChannelParams.from_snr(self.snr, power=self.power, snr_max=self.snr_max)
            noise = 1.0 if self.noise_variance is None else self.noise_variance
            return ChannelParams(self.power, noise, self.snr_max)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def effective_delta(self) -> float:
        if self.delta is not None:
            return self.delta
        return lower_bound_gap(self.k, self.horizon, self.build_channel().effective_snr())

    def build_instance(self) -> BanditInstance:
        kind, b = self.instance, self.bound_b
        try:
            if kind == "gap":
                base = gap_instance(self.k, self.effective_delta())
                return BanditInstance(base.arms, b) if b != base.b else base
            if kind == "hard":
                return deterministic_hard_instance(self.k, b, self.good_arm)
            if not self.means:
                raise ConfigError(f"instance '{kind}' needs a 'means' list")
            if len(self.means) != self.k:
                raise ConfigError(f"'means' has {len(self.means)} entries but k = {self.k}")
            build = {"gaussian": gaussian_instance, "rademacher": rademacher_instance,
                     "deterministic": deterministic_instance}[kind]
            return build(self.means, b)
        except ConfigError:
            raise
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"instance '{kind}': {exc}") from None

    def build_schedule(self) -> Schedule:
        instance = self.build_instance()
        try:
            return build_schedule(
                Algorithm.parse(self.algorithm), instance.k, self.horizon, instance.b,
                self.build_channel(),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def sweep_points(self) -> list["ExperimentConfig"]:
        """One config per point of the Cartesian product of the sweep axes."""
        axes = {name: getattr(self, name) for name in SWEEP_AXES if getattr(self, name) is not None}
        if not axes:
            raise ConfigError("sweep needs at least one of " + ", ".join(SWEEP_AXES))
        for name, values in axes.items():
            if len(values) == 0:
                raise ConfigError(f"sweep axis {name} is empty")
        target = {"sweep_snr": "snr", "sweep_b": "b", "sweep_horizon": "horizon"}
        points = []
        for combo in itertools.product(*axes.values()):
            changes = {target[name]: value for name, value in zip(axes, combo)}
            if "snr" in changes:
                changes["noise_variance"] = None
            points.append(dataclasses.replace(self, sweep_snr=None, sweep_b=None,
                                              sweep_horizon=None, **changes))
        return points

    def validate(self) -> None:
        """Build every object a run needs; raises :class:`ConfigError` on the first problem."""
        for name in ("replications", "parallel"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.audit_tol < 0:
            raise ConfigError("audit_tol must be >= 0")
        if self.instance not in INSTANCE_KINDS:
            raise ConfigError(f"unknown instance kind {self.instance!r}")
        self.build_schedule()


def describe_instance(config: ExperimentConfig) -> dict:
    inst = config.build_instance()
    return {"digest": inst.digest(), "means": inst.means.tolist(), "best_arm": inst.best_arm}

