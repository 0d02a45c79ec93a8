"""Run configuration: flat key=value sections, strict validation, defaults.

The text format is INI-like with four known sections::

    [lattice]      rows, cols
    [hamiltonian]  omega, delta, rb
    [model]        kind, d_hidden, d_ff, n_cells, n_heads,
                   patch_rows, patch_cols, sub_rows, sub_cols
    [training]     iterations, n_samples, mini_batch, learning_rate,
                   beta1, beta2, eps, d_split, seed, checkpoint_every
    [output]       out_dir, metrics_file, checkpoint_file

Unknown sections or keys are rejected; every default that fills a missing
key is logged on the ``rydberg_vmc.config`` logger. ``parse_config`` and
``format_config`` are mutually inverse on valid configurations.
"""

from __future__ import annotations

import configparser
import logging
from dataclasses import dataclass, fields

from .lattice import LatticeSpec, PatchScheme, build_hamiltonian
from .vmc import TrainConfig
from .wavefunction import ModelConfig

__all__ = ["RunConfig", "ConfigError", "parse_config", "format_config"]

log = logging.getLogger("rydberg_vmc.config")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # lattice
    rows: int
    cols: int
    # hamiltonian
    omega: float = 1.0
    delta: float = 1.0
    rb: float = 7.0 ** (1.0 / 6.0)
    # model
    kind: str = "rnn"
    d_hidden: int = 128
    d_ff: int = 2048
    n_cells: int = 2
    n_heads: int = 8
    patch_rows: int = 1
    patch_cols: int = 1
    sub_rows: int = 0  # 0 -> whole patch
    sub_cols: int = 0
    # training
    iterations: int = 1000
    n_samples: int = 512
    mini_batch: int = 256
    learning_rate: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    d_split: int = 0  # 0 -> one part per patch group
    seed: int = 1
    checkpoint_every: int = 0
    # output
    out_dir: str = "."
    metrics_file: str = "metrics.csv"
    checkpoint_file: str = "model.ckpt"

    # -- derived builders ----------------------------------------------------

    def lattice(self) -> LatticeSpec:
        return LatticeSpec(rows=self.rows, cols=self.cols)

    def scheme(self) -> PatchScheme:
        return PatchScheme(
            patch_rows=self.patch_rows,
            patch_cols=self.patch_cols,
            sub_rows=self.sub_rows,
            sub_cols=self.sub_cols,
        )

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            kind=self.kind,
            lattice=self.lattice(),
            scheme=self.scheme(),
            d_hidden=self.d_hidden,
            d_ff=self.d_ff,
            n_cells=self.n_cells,
            n_heads=self.n_heads,
            seed=self.seed,
        )

    def hamiltonian(self):
        return build_hamiltonian(self.lattice(), self.omega, self.delta, self.rb)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            iterations=self.iterations,
            n_samples=self.n_samples,
            mini_batch=self.mini_batch,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            d_split=self.d_split or None,
            seed=self.seed,
            checkpoint_every=self.checkpoint_every,
        )

    def validate(self) -> "RunConfig":
        """Re-check every module-level invariant reachable from the config."""
        try:
            self.model_config()
            self.train_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.d_split:
            n_groups = (self.rows // self.patch_rows) * (self.cols // self.patch_cols)
            if self.d_split < 0 or n_groups % self.d_split:
                raise ConfigError(
                    f"d_split {self.d_split} must divide the {n_groups}-group sequence"
                )
        return self


_SECTIONS: dict[str, tuple[str, ...]] = {
    "lattice": ("rows", "cols"),
    "hamiltonian": ("omega", "delta", "rb"),
    "model": (
        "kind",
        "d_hidden",
        "d_ff",
        "n_cells",
        "n_heads",
        "patch_rows",
        "patch_cols",
        "sub_rows",
        "sub_cols",
    ),
    "training": (
        "iterations",
        "n_samples",
        "mini_batch",
        "learning_rate",
        "beta1",
        "beta2",
        "eps",
        "d_split",
        "seed",
        "checkpoint_every",
    ),
    "output": ("out_dir", "metrics_file", "checkpoint_file"),
}

_REQUIRED = (("lattice", "rows"), ("lattice", "cols"))

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(section: str, key: str, raw: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(
            f"[{section}] {key} = {raw!r}: expected {kind}"
        ) from None


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a configuration; defaults fill missing keys."""
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(
            f"duplicate key '{exc.option}' in section [{exc.section}] (line {exc.lineno})"
        ) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}] (line {exc.lineno})") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None

    values: dict[str, object] = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            values[key] = _convert(section, key, raw)

    for section, key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key '{key}' in section [{section}]")

    for section, keys in _SECTIONS.items():
        for key in keys:
            if key not in values:
                default = getattr(RunConfig, key)
                log.info("default applied: [%s] %s = %r", section, key, default)

    try:
        config = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return config.validate()


def _format_value(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def format_config(config: RunConfig) -> str:
    """Render a RunConfig back to text; ``parse_config`` inverts it exactly."""
    lines = []
    for section, keys in _SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_format_value(getattr(config, key))}")
        lines.append("")
    return "\n".join(lines)
