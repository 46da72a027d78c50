"""Run configuration: one JSON document with ``scene``, ``encoder``, ``adapter``
and ``train`` sections (``train.loss`` nested). Every field has a default;
unknown keys and wrongly typed values are rejected with the dotted key named.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

from . import io
from .errors import ContractError
from .losses import LossWeights
from .model import AdapterConfig, EncoderConfig, TrainConfig
from .synthdata import SceneParams

SECTIONS = {"scene": SceneParams, "encoder": EncoderConfig, "adapter": AdapterConfig, "train": TrainConfig}
NESTED = {("train", "loss"): LossWeights}


@dataclass
class RunConfig:
    scene: SceneParams = field(default_factory=SceneParams)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    adapter: AdapterConfig = field(default_factory=AdapterConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self):
        self.scene.validate()
        self.encoder.validate()
        self.adapter.validate()
        self.train.validate()
        if self.scene.side != self.encoder.side:
            raise ContractError(f"encoder.side={self.encoder.side} does not match scene.side={self.scene.side}")
        return self

    def to_dict(self):
        return {name: asdict(getattr(self, name)) for name in SECTIONS}


def _check_value(key, default, value):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, str):
        ok = isinstance(value, str)
    else:  # optional fields default to None
        ok = value is None or (isinstance(value, (int, float)) and not isinstance(value, bool))
        value = float(value) if ok and value is not None else value
    if not ok:
        raise ContractError(f"config key {key}: expected {type(default).__name__}, got {value!r}")
    return value


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ContractError(f"config key {path}: expected an object")
    defaults = cls()
    known = {f.name for f in fields(cls)}
    for k in data:
        if k not in known:
            raise ContractError(f"unknown config key {path}.{k}")
    kwargs = {}
    for k, v in data.items():
        nested = NESTED.get((path, k))
        if nested is not None:
            kwargs[k] = _build(nested, v, f"{path}.{k}")
        else:
            kwargs[k] = _check_value(f"{path}.{k}", getattr(defaults, k), v)
    try:
        return cls(**kwargs)
    except ContractError as exc:
        raise ContractError(f"config section {path}: {exc}") from None


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ContractError("config must be a JSON object")
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ContractError(f"unknown config key {unknown[0]}")
    cfg = RunConfig(**{name: _build(cls, data.get(name, {}), name) for name, cls in SECTIONS.items()})
    try:
        return cfg.validate()
    except ContractError as exc:
        raise ContractError(f"invalid config: {exc}") from None


def load_config(path=None):
    return RunConfig().validate() if path is None else config_from_dict(io.read_json(path))


def save_config(path, cfg):
    io.write_json(path, cfg.to_dict())


# Hyperparameters of the full-size setup (26M-parameter backbone), kept for
# reference only: at toy scale this learning rate barely moves the weights.
PAPER_SCALE = {
    "encoder": {"m": 2},
    "adapter": {"strategy": "hybrid"},
    "train": {"lr": 5e-6, "warmup": 5000, "batch_size": 16, "loss": {"lambda_s": 0.5, "lambda_grad": 0.1, "lambda_smooth": 0.1}},
}

PROFILES = {"toy": {}, "paper-scale": PAPER_SCALE}


def profile(name):
    if name not in PROFILES:
        raise ContractError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
    return config_from_dict(PROFILES[name])
