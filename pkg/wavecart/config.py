import yaml
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .utils import ConfigError

WAVELETS = ("haar", "db4", "sym4")
EXTENSION_MODES = ("symmetric", "periodic", "zero-pad")
THRESHOLD_MODES = ("soft", "hard")
FINAL_STRATEGIES = ("nested", "top_k")

DEFAULT_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "wavecart" / "default.yaml"


@dataclass(frozen=True)
class PipelineConfig:
    # preprocessing
    m: int = 512
    marker_fraction: float = 0.5
    # wavelets
    wavelet: str = "sym4"
    extension_mode: str = "symmetric"
    denoise_level_range: tuple = (3, 5)
    threshold_mode: str = "soft"
    level_dependent_threshold: bool = False
    # compression
    elbow_threshold: float = 3.0
    elbow_epsilon: float = 1e-12
    elbow_relative_floor: float = 0.0
    fallback_level: int = 5
    # cart
    min_node_size: int = 5
    max_depth: int = 30
    surrogate_count: int = 5
    importance_with_primary: bool = True
    cv_folds: int = 10
    cv_repeats: int = 5
    one_se_rule: bool = False
    bootstrap_count: int = 25
    # selection
    importance_keep_fraction: float = 0.2
    importance_floor: float = 1.0
    rank_on_screened: bool = True
    forward_margin: float = 0.0
    final_strategy: str = "nested"
    final_top_k: int = 5
    refinement_max_size: int = 15
    # run
    seed: int = 0
    threads: int = 0           # 0 = all cores

    def __post_init__(self):
        object.__setattr__(self, "denoise_level_range", tuple(int(v) for v in self.denoise_level_range))
        if violations := self.violations():
            raise ConfigError("; ".join(violations))

    def violations(self):
        v = []
        positive = ("m", "fallback_level", "min_node_size", "max_depth", "cv_folds",
                    "cv_repeats", "bootstrap_count", "final_top_k", "refinement_max_size")
        for name in positive:
            if int(getattr(self, name)) < 1:
                v.append(f"{name} must be positive")
        if self.m < 2:
            v.append("m must be at least 2")
        if self.surrogate_count < 0:
            v.append("surrogate_count must be nonnegative")
        if self.wavelet not in WAVELETS:
            v.append(f"wavelet must be one of {', '.join(WAVELETS)}")
        if self.extension_mode not in EXTENSION_MODES:
            v.append(f"extension_mode must be one of {', '.join(EXTENSION_MODES)}")
        if self.threshold_mode not in THRESHOLD_MODES:
            v.append(f"threshold_mode must be one of {', '.join(THRESHOLD_MODES)}")
        if self.final_strategy not in FINAL_STRATEGIES:
            v.append(f"final_strategy must be one of {', '.join(FINAL_STRATEGIES)}")
        lo_hi = self.denoise_level_range
        if len(lo_hi) != 2 or lo_hi[0] < 1 or lo_hi[0] > lo_hi[1]:
            v.append("denoise_level_range must be [low, high] with 1 <= low <= high")
        if not 0.0 < self.marker_fraction < 1.0:
            v.append("marker_fraction must lie in (0, 1)")
        if not 0.0 < self.importance_keep_fraction <= 1.0:
            v.append("importance_keep_fraction must lie in (0, 1]")
        if not self.elbow_threshold > 1.0:
            v.append("elbow_threshold must be greater than 1")
        if self.elbow_epsilon < 0 or self.elbow_relative_floor < 0:
            v.append("elbow_epsilon and elbow_relative_floor must be nonnegative")
        if self.forward_margin < 0:
            v.append("forward_margin must be nonnegative")
        if self.importance_floor < 0:
            v.append("importance_floor must be nonnegative")
        return v

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["denoise_level_range"] = list(self.denoise_level_range)
        return d

    def with_overrides(self, **overrides):
        overrides = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(sorted(unknown))}")
        return replace(self, **overrides)


class Config:
    """Loads a flat YAML file of PipelineConfig keys"""
    def __init__(self, config_path=None):
        self.config_path = None if config_path is None else Path(config_path)
        self.config_yaml = {}
        if self.config_path is not None:
            if not self.config_path.is_file():
                raise ConfigError(f"Config file not found: {self.config_path}")
            try:
                self.config_yaml = yaml.safe_load(self.config_path.open("r")) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Cannot parse config {self.config_path}: {e}") from e
            if not isinstance(self.config_yaml, dict):
                raise ConfigError(f"Config {self.config_path} must be a flat key-value mapping")

        known = {f.name: f.default for f in fields(PipelineConfig)}
        unknown = set(self.config_yaml) - set(known)
        if unknown:
            raise ConfigError(f"Unknown config keys in {self.config_path}: {', '.join(sorted(unknown))}")
        try:
            self.pipeline = PipelineConfig(**{name: self.config_yaml.get(name, default)
                                              for name, default in known.items()})
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid value in {self.config_path}: {e}") from e


def load_config(config_path, args=None):
    """Config file values, then command line overrides"""
    config = Config(config_path=config_path).pipeline
    if args is None:
        return config
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "threads", None) is not None:
        overrides["threads"] = args.threads
    if getattr(args, "strategy", None) is not None:
        overrides["final_strategy"] = args.strategy
    if getattr(args, "top_k", None) is not None:
        overrides["final_top_k"] = args.top_k
    return config.with_overrides(**overrides)
