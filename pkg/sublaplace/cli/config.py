""" Experiment configuration: JSON files parsed into frozen dataclasses, with fail-fast validation """

import enum
import hashlib
import json
import pathlib
from dataclasses import dataclass, field, fields

from ..bandit.agent import AgentConfig, Posterior
from ..bandit.const import HIDDEN_WIDTHS as BANDIT_WIDTHS, INPUT_DIM as BANDIT_INPUT_DIM
from ..bandit.wheel import WheelConfig
from ..data.dataset import Task
from ..data.synthetic import SyntheticGenerator, SyntheticSpec
from ..metrics.wasserstein import VarianceKind
from ..net.model import build_layers
from ..net.train import LRSchedule, Optimizer, TrainConfig
from ..select.const import POOL_DEFAULT, POOL_EXTENDED
from ..select.selection import SelectionMethod

DEFAULT_HIDDEN_WIDTHS = (50, 50)
DEFAULT_TRAIN = {"learning_rate": 1e-2, "epochs": 200, "batch_size": 128}

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_FAILURE = 3
EXIT_FALSIFIED = 4


class ConfigError(ValueError):
    "Configuration file is malformed or inconsistent"


class Experiment(enum.Enum):
    WASSERSTEIN = enum.auto()
    COVERAGE = enum.auto()
    THEORY = enum.auto()
    BANDIT = enum.auto()

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class DataSpec:
    path: str
    target_column: str | int
    delimiter: str | None = ","
    header: bool = True
    task: Task = Task.REGRESSION
    test_fraction: float = 0.1


@dataclass(frozen=True)
class MethodSpec:
    method: str
    k: tuple[int, ...] = ()


@dataclass(frozen=True)
class CoverageSpec:
    level: float = 0.95
    variance: VarianceKind = VarianceKind.EPISTEMIC
    ensemble_members: int = 0
    oracle_widths: tuple[int, ...] = (200, 200)
    oracle_epochs: int | None = None


@dataclass(frozen=True)
class TheorySpec:
    instances: int = 100
    theorem1_p: int = 6
    theorem2_p: int = 8
    theorem2_k: tuple[int, ...] = (2, 3)
    theorem3_p: int = 8
    theorem3_k: int = 2
    epsilon: float = 0.15
    ratio_margin: float = 1.2
    classification_p: int = 5
    max_p: int = 10


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    seeds: tuple[int, ...]
    output_dir: str | None = None
    data: DataSpec | None = None
    synthetic: SyntheticSpec | None = None
    hidden_widths: tuple[int, ...] = DEFAULT_HIDDEN_WIDTHS
    train: TrainConfig = field(default_factory=TrainConfig)
    prior_precision: float = 1.0
    methods: tuple[MethodSpec, ...] = ()
    variance: VarianceKind = VarianceKind.TOTAL
    pool: str = POOL_DEFAULT
    test_subsample: int | None = None
    coverage: CoverageSpec = field(default_factory=CoverageSpec)
    theory: TheorySpec = field(default_factory=TheorySpec)
    wheel: WheelConfig = field(default_factory=WheelConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    source: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def hash(self) -> str:
        """Hash of the effective configuration; the output location is not part of it"""
        return config_hash({key: value for key, value in self.source.items() if key != "output_dir"})


DEFAULT_METHODS = {
    Experiment.WASSERSTEIN: [
        {"method": m, "k": [50, 100, 200, 500]}
        for m in ("gradient_laplace", "greedy_laplace", "subnet_diagonal", "last_k")
    ],
    Experiment.BANDIT: [
        {"method": "gradient_laplace", "k": [500]},
        {"method": "subnet_diagonal", "k": [500]},
        {"method": "map"},
    ],
}
DEFAULT_METHODS[Experiment.COVERAGE] = DEFAULT_METHODS[Experiment.WASSERSTEIN]
DEFAULT_METHODS[Experiment.THEORY] = []

TOP_LEVEL_KEYS = {
    "experiment",
    "seeds",
    "output_dir",
    "dataset",
    "synthetic",
    "model",
    "train",
    "prior_precision",
    "methods",
    "variance",
    "pool",
    "test_subsample",
    "coverage",
    "theory",
    "bandit",
}


def config_hash(source: dict) -> str:
    canonical = json.dumps(source, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _check_keys(section: dict, allowed: set[str], where: str) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")
    return section


def _enum(cls: type[enum.Enum], value: str, where: str):
    try:
        return cls[str(value).strip().upper().replace("-", "_")]
    except KeyError:
        choices = [m.name.lower() for m in cls]
        raise ConfigError(f"{where}: {value!r} is not one of {choices}")


def _build(cls, values: dict, where: str):
    try:
        return cls(**values)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from e


def _parse_data(section: dict) -> DataSpec:
    section = dict(_check_keys(section, {f.name for f in fields(DataSpec)}, "dataset"))
    if "path" not in section or "target_column" not in section:
        raise ConfigError("dataset needs path and target_column")
    if "task" in section:
        section["task"] = _enum(Task, section["task"], "dataset.task")
    return _build(DataSpec, section, "dataset")


def _parse_synthetic(section: dict) -> SyntheticSpec:
    section = dict(_check_keys(section, {f.name for f in fields(SyntheticSpec)}, "synthetic"))
    if "generator" in section:
        section["generator"] = _enum(SyntheticGenerator, section["generator"], "synthetic.generator")
    if "task" in section:
        section["task"] = _enum(Task, section["task"], "synthetic.task")
    return _build(SyntheticSpec, section, "synthetic")


def _parse_train(section: dict) -> TrainConfig:
    allowed = {f.name for f in fields(TrainConfig)} - {"seed", "weight_decay"}
    section = {**DEFAULT_TRAIN, **_check_keys(section, allowed, "train")}
    if "optimizer" in section:
        section["optimizer"] = _enum(Optimizer, section["optimizer"], "train.optimizer")
    if "lr_schedule" in section:
        section["lr_schedule"] = _enum(LRSchedule, section["lr_schedule"], "train.lr_schedule")
    return _build(TrainConfig, section, "train")


def _parse_methods(entries: list, experiment: Experiment) -> tuple[MethodSpec, ...]:
    if not isinstance(entries, list):
        raise ConfigError("methods must be a list")
    specs = []
    for i, entry in enumerate(entries):
        entry = _check_keys(entry, {"method", "k"}, f"methods[{i}]")
        label = entry.get("method")
        if experiment == Experiment.BANDIT:
            try:
                posterior = Posterior.from_label(str(label))
            except ValueError as e:
                raise ConfigError(f"methods[{i}]: {e}") from e
            needs_k = posterior.uses_k
        else:
            method = _enum(SelectionMethod, label, f"methods[{i}].method")
            if method == SelectionMethod.EXPLICIT:
                raise ConfigError(f"methods[{i}]: explicit subsets cannot be swept")
            needs_k = method != SelectionMethod.NEURAL_LINEAR
        ks = entry.get("k", [])
        ks = [ks] if isinstance(ks, int) else list(ks)
        if needs_k and not ks:
            raise ConfigError(f"methods[{i}]: {label} needs a k grid")
        if any(not isinstance(k, int) or k < 1 for k in ks):
            raise ConfigError(f"methods[{i}]: k values must be positive integers")
        specs.append(MethodSpec(str(label).lower(), tuple(ks) if needs_k else ()))
    return tuple(specs)


def _parse_coverage(section: dict) -> CoverageSpec:
    section = dict(_check_keys(section, {f.name for f in fields(CoverageSpec)}, "coverage"))
    if "variance" in section:
        section["variance"] = _enum(VarianceKind, section["variance"], "coverage.variance")
    if "oracle_widths" in section:
        section["oracle_widths"] = tuple(section["oracle_widths"])
    spec = _build(CoverageSpec, section, "coverage")
    if not 0 < spec.level < 1:
        raise ConfigError(f"coverage.level must lie in (0, 1), got {spec.level}")
    if spec.ensemble_members == 1 or spec.ensemble_members < 0:
        raise ConfigError("coverage.ensemble_members must be 0 (disabled) or at least 2")
    return spec


def _parse_theory(section: dict) -> TheorySpec:
    section = dict(_check_keys(section, {f.name for f in fields(TheorySpec)}, "theory"))
    if "theorem2_k" in section:
        ks = section["theorem2_k"]
        section["theorem2_k"] = (ks,) if isinstance(ks, int) else tuple(ks)
    spec = _build(TheorySpec, section, "theory")
    if spec.instances < 1:
        raise ConfigError("theory.instances must be positive")
    if max(spec.theorem2_p, spec.theorem3_p) > 12 or max(spec.theorem1_p, spec.classification_p) > spec.max_p:
        raise ConfigError("exhaustive theory checks are capped at p=12 and theory.max_p")
    return spec


def _parse_bandit(section: dict, hidden_widths: tuple[int, ...]) -> tuple[WheelConfig, AgentConfig]:
    section = _check_keys(section, {f.name for f in fields(WheelConfig)} - {"seed"} | {"agent"}, "bandit")
    wheel = _build(WheelConfig, {key: value for key, value in section.items() if key != "agent"}, "bandit")
    agent_allowed = {f.name for f in fields(AgentConfig)} - {"posterior", "k", "seed", "hidden_widths"}
    agent_section = _check_keys(section.get("agent", {}), agent_allowed, "bandit.agent")
    agent = _build(AgentConfig, {**agent_section, "hidden_widths": hidden_widths}, "bandit.agent")
    return wheel, agent


def parameter_count(input_dim: int, hidden_widths: tuple[int, ...]) -> int:
    return sum(layer.size for layer in build_layers(input_dim, hidden_widths))


def check_k_grid(cfg: ExperimentConfig, input_dim: int) -> int:
    """p for the configured network on inputs of input_dim, after checking every k against it"""
    p = parameter_count(input_dim, cfg.hidden_widths)
    for spec in cfg.methods:
        too_large = [k for k in spec.k if k > p]
        if too_large:
            raise ConfigError(f"{spec.method}: k values {too_large} exceed p={p}")
    return p


def parse_config(raw: dict, experiment: Experiment | None = None) -> ExperimentConfig:
    raw = _check_keys(raw, TOP_LEVEL_KEYS, "config")
    declared = _enum(Experiment, raw["experiment"], "experiment") if "experiment" in raw else None
    if declared and experiment and declared != experiment:
        raise ConfigError(f"config is for {declared.label}, not {experiment.label}")
    experiment = experiment or declared
    if experiment is None:
        raise ConfigError("experiment is not set")

    seeds = raw.get("seeds", [])
    if not isinstance(seeds, list) or not seeds or any(not isinstance(s, int) or not 0 <= s < 2**64 for s in seeds):
        raise ConfigError("seeds must be a nonempty list of unsigned 64-bit integers")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds contain duplicates")

    model = _check_keys(raw.get("model", {}), {"hidden_widths"}, "model")
    default_widths = BANDIT_WIDTHS if experiment == Experiment.BANDIT else DEFAULT_HIDDEN_WIDTHS
    hidden_widths = tuple(model.get("hidden_widths", default_widths))
    if not hidden_widths or any(not isinstance(w, int) or w < 1 for w in hidden_widths):
        raise ConfigError("model.hidden_widths must be a nonempty list of positive integers")

    values = {
        "experiment": experiment,
        "seeds": tuple(seeds),
        "output_dir": raw.get("output_dir"),
        "hidden_widths": hidden_widths,
        "train": _parse_train(raw.get("train", {})),
        "methods": _parse_methods(raw.get("methods", DEFAULT_METHODS[experiment]), experiment),
        "prior_precision": float(raw.get("prior_precision", 1.0)),
        "pool": raw.get("pool", POOL_DEFAULT),
        "test_subsample": raw.get("test_subsample"),
        "coverage": _parse_coverage(raw.get("coverage", {})),
        "theory": _parse_theory(raw.get("theory", {})),
        "source": dict(raw, experiment=experiment.label),
    }
    if values["prior_precision"] <= 0:
        raise ConfigError("prior_precision must be positive")
    if values["test_subsample"] is not None and (not isinstance(values["test_subsample"], int) or values["test_subsample"] < 1):
        raise ConfigError("test_subsample must be a positive integer")
    if values["pool"] not in (POOL_DEFAULT, POOL_EXTENDED):
        raise ConfigError(f"pool must be {POOL_DEFAULT!r} or {POOL_EXTENDED!r}")
    if "variance" in raw:
        values["variance"] = _enum(VarianceKind, raw["variance"], "variance")
    if "dataset" in raw:
        values["data"] = _parse_data(raw["dataset"])
    if "synthetic" in raw:
        values["synthetic"] = _parse_synthetic(raw["synthetic"])
    if experiment == Experiment.BANDIT:
        values["wheel"], values["agent"] = _parse_bandit(raw.get("bandit", {}), hidden_widths)

    cfg = ExperimentConfig(**values)
    if experiment in (Experiment.WASSERSTEIN, Experiment.COVERAGE):
        if (cfg.data is None) == (cfg.synthetic is None):
            raise ConfigError("exactly one of dataset and synthetic must be given")
        if not cfg.methods:
            raise ConfigError("at least one method is needed")
        if cfg.synthetic is not None:
            check_k_grid(cfg, cfg.synthetic.input_dim)
    if experiment == Experiment.BANDIT:
        check_k_grid(cfg, BANDIT_INPUT_DIM)
    return cfg


def load_config(
    path: str | pathlib.Path,
    experiment: Experiment | None = None,
    seeds: list[int] | None = None,
    output_dir: str | None = None,
) -> ExperimentConfig:
    """Parse a JSON config; command-line overrides are folded into the source before hashing"""
    try:
        with open(path) as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: line {e.lineno}, column {e.colno}")
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    if seeds is not None:
        raw["seeds"] = list(seeds)
    if output_dir is not None:
        raw["output_dir"] = str(output_dir)
    return parse_config(raw, experiment)
