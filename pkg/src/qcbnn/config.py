"""Experiment run configuration and its text format.

Config files are flat ``key = value`` lines; ``#`` starts a comment and
``[section]`` headers are allowed for organization but carry no meaning.
Every key has a default, unknown keys are rejected, and sweeps are
expressed as comma lists (architectures, seeds) plus zipped depth lists
(``layers_list`` / ``reupload_list``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .circuits import Architecture
from .samplers import NoiseLaw, PriorSpec
from .training import TrainConfig


class ConfigError(ValueError):
    """Raised for unparseable, unknown, or inconsistent config input."""


@dataclass
class RunConfig:
    """Full harness configuration: training knobs plus sweep lists,
    dataset source and output controls."""

    # sweep axes
    archs: list[Architecture] = field(default_factory=lambda: [Architecture.CIRCUIT_III])
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3])
    layers_list: list[int] = field(default_factory=lambda: [1])
    reupload_list: list[bool] = field(default_factory=lambda: [False])
    # training
    epochs: int = 50
    batch_size: int = 10
    alpha: float = 1.0
    beta: float = 1.0
    lr_generator: float = 0.005
    lr_discriminator: float = 0.01
    lr_classifier: float = 0.002
    disc_steps: int = 1
    samples_per_step: int = 1
    n_ensemble: int = 100
    eval_ensemble: int = 8
    sampler: str = "quantum"
    noise_law: str = "uniform"
    noise_mu: float = 3.141592653589793
    noise_sigma: float = 1.0
    noise_dim: int = 4
    prior_law: str = "uniform"
    prior_mu: float = 0.0
    prior_sigma: float = 0.5
    embedding_pairs: str = "adjacent"
    cr_axis: str = "X"
    conv_stride: int = 2
    scale_likelihood: bool = True
    # dataset
    dataset: str = "synth"
    dataset_format: str = "binary"
    synth_samples: int = 250
    synth_imbalance: float = 0.27
    synth_noise: float = 0.12
    synth_seed: int = 7
    split_fractions: list[float] = field(default_factory=lambda: [0.8, 0.2])
    split_seed: int = 7
    # reporting
    out: str = "runs"
    calibration_bins: int = 10
    subset_reference: str = "overall"
    svg: bool = True

    def __post_init__(self):
        if not self.archs or not self.seeds:
            raise ConfigError("need at least one architecture and one seed")
        if len(self.layers_list) != len(self.reupload_list):
            raise ConfigError(
                "conflicting sweep lengths: layers_list and reupload_list "
                f"have {len(self.layers_list)} and {len(self.reupload_list)} entries"
            )

    def train_config(self, arch: Architecture, layers: int, reupload: bool,
                     seed: int) -> TrainConfig:
        """Materialize the per-run training config for one sweep cell."""
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            alpha=self.alpha,
            beta=self.beta,
            lr_generator=self.lr_generator,
            lr_discriminator=self.lr_discriminator,
            lr_classifier=self.lr_classifier,
            disc_steps=self.disc_steps,
            samples_per_step=self.samples_per_step,
            n_ensemble=self.n_ensemble,
            eval_ensemble=self.eval_ensemble,
            seed=seed,
            sampler=self.sampler,
            arch=arch,
            layers=layers,
            reupload=reupload,
            embedding_pairs=self.embedding_pairs,
            cr_axis=self.cr_axis,
            noise=NoiseLaw(self.noise_law, self.noise_dim, self.noise_mu, self.noise_sigma),
            prior=PriorSpec(self.prior_law, self.prior_mu, self.prior_sigma),
            conv_stride=self.conv_stride,
            scale_likelihood=self.scale_likelihood,
        )

    def cells(self):
        """All sweep cells as (arch, layers, reupload, seed) tuples."""
        return [
            (arch, layers, reupload, seed)
            for arch in self.archs
            for layers, reupload in zip(self.layers_list, self.reupload_list)
            for seed in self.seeds
        ]


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _parse_value(name: str, value: str, default):
    try:
        if name == "archs":
            return [Architecture.parse(v) for v in value.split(",") if v.strip()]
        if name == "seeds":
            return [int(v) for v in value.split(",")]
        if name == "layers_list":
            return [int(v) for v in value.split(",")]
        if name == "reupload_list":
            return [_parse_bool(v) for v in value.split(",")]
        if name == "split_fractions":
            return [float(v) for v in value.split(",")]
        if isinstance(default, bool):
            return _parse_bool(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        return value.strip()
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(f"bad value for {name}: {value!r} ({err})") from None


_KEY_ALIASES = {"arch": "archs", "seed": "seeds", "layers": "layers_list",
                "reupload": "reupload_list", "ensemble": "n_ensemble"}


def apply_settings(config: RunConfig, settings: dict[str, str]) -> RunConfig:
    """New config with ``key=value`` string settings applied and re-validated."""
    by_name = {f.name: f for f in fields(RunConfig)}
    updates = {}
    for raw_key, raw_value in settings.items():
        key = _KEY_ALIASES.get(raw_key, raw_key)
        if key not in by_name:
            raise ConfigError(f"unknown config key {raw_key!r}")
        updates[key] = _parse_value(key, raw_value, getattr(config, key))
    return replace(config, **updates)


def parse_config(text: str) -> RunConfig:
    """RunConfig from config-file text; missing keys keep their defaults."""
    settings: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        settings[key] = value
    return apply_settings(RunConfig(), settings)


def format_config(config: RunConfig) -> str:
    """Effective-config echo in the same key = value format."""
    lines = ["# effective configuration"]
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        if f.name == "archs":
            text = ",".join(a.value for a in value)
        elif isinstance(value, list):
            text = ",".join(str(v).lower() if isinstance(v, bool) else str(v) for v in value)
        elif isinstance(value, bool):
            text = str(value).lower()
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
