import hashlib
import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, fields, replace

from dotenv import load_dotenv

from errors import ConfigError

# Load environment variables
load_dotenv()

VERSION = "0.3.0"

LOG_LEVEL = os.getenv("EPT_LOG_LEVEL", "INFO")
DEFAULT_PROFILE = os.getenv("EPT_PROFILE", "desk")
SEED_ENV = "EPT_SEED"

DENOISE_MODES = ("atom", "block-T", "block-C")
HEAD_MODES = ("atom", "block", "graph")
LABEL_NORMS = ("none", "std", "mad")


def configure_logging(level=None):
    logging.basicConfig(
        level=(level or LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


# ---------------------------
# Sections
# ---------------------------

@dataclass(frozen=True)
class Thresholds:
    """Edge-typing distances in Angstrom."""
    delta_topo: float = 1.6
    delta_max: float = 10.0

    def __post_init__(self):
        if not 0 < self.delta_topo < self.delta_max:
            raise ConfigError(
                f"thresholds must satisfy 0 < delta_topo < delta_max, "
                f"got delta_topo={self.delta_topo}, delta_max={self.delta_max}"
            )


@dataclass(frozen=True)
class ModelConfig:
    h: int = 64
    h_ffn: int = 64
    h_edge: int = 16
    h_rbf: int = 32
    L: int = 3
    S: int = 4
    delta_max: float = 10.0
    ln_eps: float = 1e-5
    omit_sml_pos: bool = False

    def __post_init__(self):
        for name in ("h", "h_ffn", "h_edge", "h_rbf", "S"):
            if getattr(self, name) < 1:
                raise ConfigError(f"model.{name} must be >= 1")
        if self.L < 0:
            raise ConfigError("model.L must be >= 0")
        if self.h % self.S:
            raise ConfigError(f"model.h={self.h} is not divisible by model.S={self.S}")
        if self.delta_max <= 0 or self.ln_eps <= 0:
            raise ConfigError("model.delta_max and model.ln_eps must be positive")

    @property
    def h_s(self):
        return self.h // self.S

    @property
    def rbf_count(self):
        return self.h_rbf


MODEL_PROFILES = {
    # full-size pretraining shape
    "full": ModelConfig(h=512, h_ffn=512, h_edge=64, h_rbf=64, L=6, S=8),
    "desk": ModelConfig(h=64, h_ffn=64, h_edge=16, h_rbf=32, L=3, S=4),
    "tiny": ModelConfig(h=8, h_ffn=8, h_edge=4, h_rbf=8, L=1, S=2),
}


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    min_lr: float = 1e-5
    epochs: int = 50
    schedule: str = "cosine"
    max_vertices: int = 5000
    sigma_t: float = 0.04
    sigma_r: float = 0.1
    denoise_mode: str = "block-C"
    noisy_node_weight: float = 0.1
    seed: int = 0
    grad_clip: float = 10.0
    checkpoint_every: int = 1
    shuffle: bool = True
    segment_k: int = 3
    head_mode: str = "graph"
    label_norm: str = "none"

    def __post_init__(self):
        if self.min_lr > self.lr:
            raise ConfigError(f"train.min_lr={self.min_lr} exceeds train.lr={self.lr}")
        if self.min_lr < 0:
            raise ConfigError("train.min_lr must be >= 0")
        if self.noisy_node_weight < 0:
            raise ConfigError("train.noisy_node_weight must be >= 0")
        if self.schedule != "cosine":
            raise ConfigError(f"unsupported train.schedule {self.schedule!r}; only 'cosine'")
        if self.denoise_mode not in DENOISE_MODES:
            raise ConfigError(
                f"invalid train.denoise_mode {self.denoise_mode!r}. Use one of: {', '.join(DENOISE_MODES)}"
            )
        if self.head_mode not in HEAD_MODES:
            raise ConfigError(f"invalid train.head_mode {self.head_mode!r}. Use one of: {', '.join(HEAD_MODES)}")
        if self.label_norm not in LABEL_NORMS:
            raise ConfigError(f"invalid train.label_norm {self.label_norm!r}. Use one of: {', '.join(LABEL_NORMS)}")
        if self.sigma_t < 0 or self.sigma_r < 0:
            raise ConfigError("noise scales must be >= 0")
        if self.epochs < 0 or self.max_vertices < 1 or self.checkpoint_every < 1 or self.segment_k < 1:
            raise ConfigError("train.epochs, max_vertices, checkpoint_every and segment_k must be positive")
        if self.grad_clip <= 0:
            raise ConfigError("train.grad_clip must be positive")


@dataclass(frozen=True)
class Tolerances:
    """Tolerances for 64-bit arithmetic; a 32-bit port rescales them here."""
    equivariance: float = 1e-9
    gradcheck: float = 1e-5
    gradcheck_step: float = 1e-6
    kernel: float = 1e-10
    kernel_single_tile: float = 1e-12
    quadrature: float = 1e-3
    score: float = 1e-3
    reduction: float = 1e-12
    rotation: float = 1e-12
    series_oracle: float = 1e-10
    p_value: float = 0.01
    roundtrip_xyz: float = 1e-6


TOLERANCES = Tolerances()

SECTIONS = {"model": ModelConfig, "train": TrainConfig, "graph": Thresholds}


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=lambda: MODEL_PROFILES[DEFAULT_PROFILE])
    train: TrainConfig = field(default_factory=TrainConfig)
    graph: Thresholds = field(default_factory=Thresholds)

    def to_toml(self):
        return "\n".join(_section_toml(name, getattr(self, name)) for name in SECTIONS)

    def model_hash(self):
        return hashlib.sha256(_section_toml("model", self.model).encode("utf-8")).hexdigest()

    def with_seed(self, seed):
        return replace(self, train=replace(self.train, seed=int(seed)))


# ---------------------------
# TOML helpers
# ---------------------------

def _toml_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _section_toml(name, section):
    lines = [f"[{name}]"]
    for f in fields(section):
        lines.append(f"{f.name} = {_toml_value(getattr(section, f.name))}")
    return "\n".join(lines) + "\n"


def _coerce(section_name, key, value, default):
    expected = type(default)
    try:
        if expected is bool:
            if isinstance(value, str):
                if value.lower() not in ("true", "false"):
                    raise ValueError(value)
                return value.lower() == "true"
            return bool(value)
        if expected is int and isinstance(value, float) and not value.is_integer():
            raise ValueError(value)
        return expected(value)
    except (TypeError, ValueError):
        raise ConfigError(
            f"{section_name}.{key} expects {expected.__name__}, got {value!r}"
        ) from None


def _apply(section_name, section, values):
    known = {f.name for f in fields(section)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section_name}]: {', '.join(unknown)}")
    coerced = {k: _coerce(section_name, k, v, getattr(section, k)) for k, v in values.items()}
    return replace(section, **coerced)


def _parse_override(text):
    if "=" not in text or "." not in text.split("=", 1)[0]:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    dotted, raw = text.split("=", 1)
    section, key = dotted.strip().split(".", 1)
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return section, key.strip(), value


def parse_run_config(data, base=None):
    """Build a RunConfig from already-parsed TOML tables."""
    base = base or RunConfig()
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")
    updated = {}
    for name in SECTIONS:
        values = data.get(name, {})
        if not isinstance(values, dict):
            raise ConfigError(f"[{name}] must be a table")
        updated[name] = _apply(name, getattr(base, name), values)
    return RunConfig(**updated)


def config_from_text(text):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid config text: {e}") from None
    return parse_run_config(data)


def load_config(path=None, overrides=(), profile=None, seed=None):
    """Resolve a RunConfig with precedence flag > environment > file > default."""
    profile = profile or DEFAULT_PROFILE
    if profile not in MODEL_PROFILES:
        raise ConfigError(f"unknown profile {profile!r}. Use one of: {', '.join(MODEL_PROFILES)}")
    config = RunConfig(model=MODEL_PROFILES[profile])

    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} does not exist") from None
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"config file {path} is not valid TOML: {e}") from None
        config = parse_run_config(data, base=config)

    grouped = {}
    for text in overrides:
        section, key, value = _parse_override(text)
        grouped.setdefault(section, {})[key] = value
    if grouped:
        config = parse_run_config(grouped, base=config)

    env_seed = os.getenv(SEED_ENV)
    if env_seed is not None and env_seed.strip():
        try:
            config = config.with_seed(int(env_seed))
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env_seed!r} is not an integer") from None
    if seed is not None:
        config = config.with_seed(seed)
    return config
