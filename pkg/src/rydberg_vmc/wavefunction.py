"""Autoregressive neural wavefunctions over patched Rydberg lattices.

Four ansatz kinds share one contract: the squared amplitude factorizes over
patch groups in :func:`~rydberg_vmc.lattice.patch_order` sequence order,

    |psi(sigma)|^2 = prod_t p(group_t | groups_<t),

so log psi(sigma) = 0.5 * sum_t log p of the observed group states. Kinds:

* ``rnn`` - GRU over single atoms (patch 1x1, two-way conditionals),
* ``patched_rnn`` - GRU over patches of p atoms (2^p-way conditionals),
* ``patched_tf`` - decoder-style transformer over patches,
* ``lptf`` - transformer trunk whose per-position output seeds the hidden
  state of a small GRU that decodes each patch in sub-patches.

Sampling and local-energy ratio evaluation run without gradient recording;
``log_amplitude`` records onto the active tape when one is open.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nets
from .autodiff import (
    Tensor,
    add,
    affine,
    asum,
    constant,
    log_softmax,
    reshape,
    scale,
    select_index,
    softmax,
)
from .lattice import LatticeSpec, PatchScheme, patch_order, sub_patch_positions
from .optim import TrainingFault

__all__ = [
    "ModelConfig",
    "Wavefunction",
    "PatchedRnn",
    "PatchedTransformer",
    "Lptf",
    "SequenceCache",
    "StaleCacheError",
    "init_model",
    "count_parameters",
    "log_amplitude_batch",
    "MODEL_KINDS",
]

MODEL_KINDS = ("rnn", "patched_rnn", "patched_tf", "lptf")


class StaleCacheError(ValueError):
    """A suffix evaluation was asked to reuse a cache whose prefix differs."""


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters of one wavefunction model."""

    kind: str
    lattice: LatticeSpec
    scheme: PatchScheme
    d_hidden: int = 128
    d_ff: int = 2048
    n_cells: int = 2
    n_heads: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind '{self.kind}'; expected {MODEL_KINDS}")
        if self.kind == "rnn" and self.scheme.patch_size != 1:
            raise ValueError("kind 'rnn' requires a 1x1 patch")
        if self.kind in ("patched_tf", "lptf"):
            if self.d_hidden % self.n_heads:
                raise ValueError(
                    f"d_hidden {self.d_hidden} must divide into {self.n_heads} heads"
                )
            if self.d_hidden % 2:
                raise ValueError("d_hidden must be even (positional encoding)")
        self.scheme.validate_lattice(self.lattice)


def _uniform(rng: np.random.Generator, shape, bound: float) -> np.ndarray:
    return rng.uniform(-bound, bound, size=shape)


def _sample_categories(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draw of one category per row of a (B, C) probability table."""
    if not np.all(np.isfinite(probs)):
        raise TrainingFault("non-finite conditional probabilities during sampling")
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0])
    return np.minimum((cdf < u[:, None]).sum(axis=1), probs.shape[1] - 1)


def _bits_of(cats: np.ndarray, n_bits: int) -> np.ndarray:
    """(B,) category indices -> (B, n_bits) little-endian bits."""
    return ((cats[:, None] >> np.arange(n_bits)) & 1).astype(np.uint8)


@dataclass
class SequenceCache:
    """Snapshot of a full forward pass, reusable for suffix re-evaluation.

    ``prefix_logp[:, g]`` is the accumulated log-probability of groups < g,
    and the kind-specific payload holds whatever lets the pass restart at any
    group boundary: hidden states for GRU kinds, per-cell key/value prefixes
    for transformer kinds.
    """

    config: np.ndarray  # (B, N) baseline bits
    prefix_logp: np.ndarray  # (B, L+1)
    log_psi: np.ndarray  # (B,)
    hidden: np.ndarray | None = None  # (B, L+1, d_hidden) for GRU kinds
    cell_kv: list = field(default_factory=list)  # per cell: (K, V) (B, h, L, e)


class Wavefunction:
    """Shared machinery for the four ansatz kinds."""

    def __init__(self, config: ModelConfig):
        self.config = config
        self.lattice = config.lattice
        self.scheme = config.scheme
        self.groups = patch_order(config.lattice, config.scheme)
        self.n_groups = len(self.groups)
        self.n_atoms = config.lattice.n_atoms
        self.patch_size = config.scheme.patch_size
        self.n_categories = 1 << self.patch_size
        self.params: dict[str, Tensor] = {}
        self._pow2 = 1 << np.arange(self.patch_size, dtype=np.int64)
        rng = np.random.default_rng(config.seed)
        bound = 1.0 / np.sqrt(config.d_hidden)
        self._build(rng, bound)

    # -- parameter plumbing -------------------------------------------------

    def _register(self, name: str, shape, rng, bound, kind: str = "weight") -> Tensor:
        if kind == "weight":
            value = _uniform(rng, shape, bound)
        elif kind == "zeros":
            value = np.zeros(shape)
        elif kind == "ones":
            value = np.ones(shape)
        else:
            raise ValueError(kind)
        t = Tensor(value, requires_grad=True)
        self.params[name] = t
        return t

    def _register_gru(self, prefix: str, d_in: int, rng, bound) -> dict:
        d_h = self.config.d_hidden
        p = {}
        for gate in ("r", "z", "n"):
            p[f"w_i{gate}"] = self._register(f"{prefix}.w_i{gate}", (d_in, d_h), rng, bound)
        for gate in ("r", "z", "n"):
            p[f"w_h{gate}"] = self._register(f"{prefix}.w_h{gate}", (d_h, d_h), rng, bound)
        for gate in ("r", "z", "n"):
            p[f"b_i{gate}"] = self._register(f"{prefix}.b_i{gate}", (d_h,), rng, bound, "zeros")
        for gate in ("r", "z", "n"):
            p[f"b_h{gate}"] = self._register(f"{prefix}.b_h{gate}", (d_h,), rng, bound, "zeros")
        return p

    def _register_head(self, prefix: str, d_out: int, rng, bound) -> dict:
        d_h = self.config.d_hidden
        return {
            "w1": self._register(f"{prefix}.w1", (d_h, d_h), rng, bound),
            "b1": self._register(f"{prefix}.b1", (d_h,), rng, bound, "zeros"),
            "w2": self._register(f"{prefix}.w2", (d_h, d_out), rng, bound),
            "b2": self._register(f"{prefix}.b2", (d_out,), rng, bound, "zeros"),
        }

    def _register_cell(self, prefix: str, rng, bound) -> dict:
        d_h, d_ff = self.config.d_hidden, self.config.d_ff
        p = {}
        for nm in ("q", "k", "v"):
            p[f"w{nm}"] = self._register(f"{prefix}.w{nm}", (d_h, d_h), rng, bound)
            p[f"b{nm}"] = self._register(f"{prefix}.b{nm}", (d_h,), rng, bound, "zeros")
        p["wo"] = self._register(f"{prefix}.wo", (d_h, d_h), rng, bound)
        p["bo"] = self._register(f"{prefix}.bo", (d_h,), rng, bound, "zeros")
        p["norm1_g"] = self._register(f"{prefix}.norm1_g", (d_h,), rng, bound, "ones")
        p["norm1_b"] = self._register(f"{prefix}.norm1_b", (d_h,), rng, bound, "zeros")
        p["ff_w1"] = self._register(f"{prefix}.ff_w1", (d_h, d_ff), rng, bound)
        p["ff_b1"] = self._register(f"{prefix}.ff_b1", (d_ff,), rng, bound, "zeros")
        p["ff_w2"] = self._register(f"{prefix}.ff_w2", (d_ff, d_h), rng, bound)
        p["ff_b2"] = self._register(f"{prefix}.ff_b2", (d_h,), rng, bound, "zeros")
        p["norm2_g"] = self._register(f"{prefix}.norm2_g", (d_h,), rng, bound, "ones")
        p["norm2_b"] = self._register(f"{prefix}.norm2_b", (d_h,), rng, bound, "zeros")
        return p

    def _build(self, rng, bound):  # pragma: no cover - abstract
        raise NotImplementedError

    # -- configuration plumbing ---------------------------------------------

    def _as_batch(self, configs) -> np.ndarray:
        bits = np.asarray(configs, dtype=np.uint8)
        if bits.ndim == 1:
            bits = bits[None, :]
        if bits.ndim != 2 or bits.shape[1] != self.n_atoms:
            raise ValueError(
                f"configurations must have shape (B, {self.n_atoms}), got {bits.shape}"
            )
        return bits

    def group_categories(self, bits: np.ndarray) -> np.ndarray:
        """(B, N) bits -> (B, L) patch-state indices in sequence order."""
        cats = np.empty((bits.shape[0], self.n_groups), dtype=np.intp)
        for g, idx in enumerate(self.groups):
            cats[:, g] = bits[:, idx].astype(np.int64) @ self._pow2
        return cats

    def group_inputs(self, bits: np.ndarray, start: int = 0) -> np.ndarray:
        """(B, L-start, p) network inputs: x_t = bits of group t-1, x_0 = 0."""
        n = bits.shape[0]
        xs = np.zeros((n, self.n_groups - start, self.patch_size), dtype=np.float64)
        for t in range(max(start, 1), self.n_groups):
            xs[:, t - start] = bits[:, self.groups[t - 1]]
        return xs

    def _check_prefix(self, bits: np.ndarray, cache: SequenceCache, start_group: int):
        if bits.shape[0] != cache.config.shape[0]:
            raise StaleCacheError(
                f"cache holds {cache.config.shape[0]} chains, got {bits.shape[0]}"
            )
        if start_group:
            prefix_atoms = np.concatenate(self.groups[:start_group])
            if not np.array_equal(bits[:, prefix_atoms], cache.config[:, prefix_atoms]):
                raise StaleCacheError(
                    f"configuration differs from the cached prefix before group {start_group}"
                )

    # -- public interface ----------------------------------------------------

    def count_parameters(self) -> int:
        return sum(int(p.value.size) for p in self.params.values())

    def log_amplitude(self, configs) -> Tensor:
        """log psi for a batch of configurations; differentiable under a tape."""
        raise NotImplementedError

    def sample(self, n_chains: int, rng: np.random.Generator):
        """Draw configurations; returns (bits (n, N) uint8, log-probabilities (n,))."""
        raise NotImplementedError

    def full_pass_cache(self, configs) -> SequenceCache:
        """Forward pass that snapshots state at every group boundary."""
        raise NotImplementedError

    def log_amplitude_suffix(self, configs, cache: SequenceCache, start_group: int):
        """log psi of configs whose groups < start_group match the cache.

        Recomputes only groups >= start_group; returns a plain (B,) array.
        """
        raise NotImplementedError


class PatchedRnn(Wavefunction):
    """GRU ansatz over single atoms (kind 'rnn') or flattened patches."""

    def _build(self, rng, bound):
        self._gru = self._register_gru("gru", self.patch_size, rng, bound)
        self._head = self._register_head("head", self.n_categories, rng, bound)

    def _logits(self, h: Tensor) -> Tensor:
        return nets.projection_head(h, self._head)

    def log_amplitude(self, configs) -> Tensor:
        bits = self._as_batch(configs)
        cats = self.group_categories(bits)
        xs = self.group_inputs(bits)
        h = constant(np.zeros((bits.shape[0], self.config.d_hidden)))
        acc = None
        for t in range(self.n_groups):
            h = nets.gru_step(constant(xs[:, t]), h, self._gru)
            logp_t = select_index(log_softmax(self._logits(h)), cats[:, t])
            acc = logp_t if acc is None else add(acc, logp_t)
        return scale(acc, 0.5)

    def sample(self, n_chains: int, rng: np.random.Generator):
        bits = np.zeros((n_chains, self.n_atoms), dtype=np.uint8)
        logp = np.zeros(n_chains)
        h = constant(np.zeros((n_chains, self.config.d_hidden)))
        x = np.zeros((n_chains, self.patch_size))
        rows = np.arange(n_chains)
        for t in range(self.n_groups):
            h = nets.gru_step(constant(x), h, self._gru)
            probs = softmax(self._logits(h)).value
            cats = _sample_categories(probs, rng)
            logp += np.log(probs[rows, cats])
            patch_bits = _bits_of(cats, self.patch_size)
            bits[:, self.groups[t]] = patch_bits
            x = patch_bits.astype(np.float64)
        return bits, logp

    def full_pass_cache(self, configs) -> SequenceCache:
        bits = self._as_batch(configs)
        cats = self.group_categories(bits)
        xs = self.group_inputs(bits)
        n, d_h = bits.shape[0], self.config.d_hidden
        hidden = np.zeros((n, self.n_groups + 1, d_h))
        prefix = np.zeros((n, self.n_groups + 1))
        h = constant(np.zeros((n, d_h)))
        rows = np.arange(n)
        for t in range(self.n_groups):
            h = nets.gru_step(constant(xs[:, t]), h, self._gru)
            hidden[:, t + 1] = h.value
            logp_t = log_softmax(self._logits(h)).value[rows, cats[:, t]]
            prefix[:, t + 1] = prefix[:, t] + logp_t
        return SequenceCache(
            config=bits.copy(),
            prefix_logp=prefix,
            log_psi=0.5 * prefix[:, -1],
            hidden=hidden,
        )

    def log_amplitude_suffix(self, configs, cache, start_group: int):
        bits = self._as_batch(configs)
        self._check_prefix(bits, cache, start_group)
        if cache.hidden is None:
            raise StaleCacheError("cache was not built by a GRU-kind model")
        cats = self.group_categories(bits)
        xs = self.group_inputs(bits, start=start_group)
        h = constant(cache.hidden[:, start_group].copy())
        acc = cache.prefix_logp[:, start_group].copy()
        rows = np.arange(bits.shape[0])
        for t in range(start_group, self.n_groups):
            h = nets.gru_step(constant(xs[:, t - start_group]), h, self._gru)
            acc += log_softmax(self._logits(h)).value[rows, cats[:, t]]
        return 0.5 * acc


class _TransformerTrunk(Wavefunction):
    """Embedding + positional encoding + T transformer cells."""

    def _build_trunk(self, rng, bound):
        d_h = self.config.d_hidden
        self._embed_w = self._register("embed.w", (self.patch_size, d_h), rng, bound)
        self._embed_b = self._register("embed.b", (d_h,), rng, bound, "zeros")
        self._cells = [
            self._register_cell(f"cell{i}", rng, bound)
            for i in range(self.config.n_cells)
        ]
        self._posenc = nets.positional_encoding(self.n_groups, d_h)

    def _trunk_full(self, xs: np.ndarray) -> Tensor:
        """(B, L, p) inputs -> (B, L, d_hidden) trunk outputs, full sequence."""
        x = affine(constant(xs), self._embed_w, self._embed_b)
        x = add(x, constant(self._posenc[: xs.shape[1]]))
        for cell in self._cells:
            x, _ = nets.transformer_cell(x, cell, self.config.n_heads)
        return x

    def _trunk_block(self, xs: np.ndarray, start: int, kv_prefixes: list):
        """Run positions start.. given per-cell K/V prefixes for positions < start.

        Returns (trunk output Tensor (B, L_new, d_h), updated per-cell prefixes).
        """
        x = affine(constant(xs), self._embed_w, self._embed_b)
        x = add(x, constant(self._posenc[start : start + xs.shape[1]]))
        new_kv = []
        for cell, prefix in zip(self._cells, kv_prefixes):
            x, kv = nets.transformer_cell(x, cell, self.config.n_heads, prefix)
            new_kv.append(kv)
        return x, new_kv


class PatchedTransformer(_TransformerTrunk):
    """Decoder-only transformer ansatz over flattened patches."""

    def _build(self, rng, bound):
        self._build_trunk(rng, bound)
        self._head = self._register_head("head", self.n_categories, rng, bound)

    def log_amplitude(self, configs) -> Tensor:
        bits = self._as_batch(configs)
        cats = self.group_categories(bits)
        y = self._trunk_full(self.group_inputs(bits))
        logp = select_index(log_softmax(nets.projection_head(y, self._head)), cats)
        return scale(asum(logp, axis=1), 0.5)

    def sample(self, n_chains: int, rng: np.random.Generator):
        bits = np.zeros((n_chains, self.n_atoms), dtype=np.uint8)
        logp = np.zeros(n_chains)
        kv = [None] * self.config.n_cells
        x = np.zeros((n_chains, 1, self.patch_size))
        rows = np.arange(n_chains)
        for t in range(self.n_groups):
            y, kv = self._trunk_block(x, t, kv)
            logits = nets.projection_head(y, self._head).value[:, 0]
            probs = softmax(constant(logits)).value
            cats = _sample_categories(probs, rng)
            logp += np.log(probs[rows, cats])
            patch_bits = _bits_of(cats, self.patch_size)
            bits[:, self.groups[t]] = patch_bits
            x = patch_bits.astype(np.float64)[:, None, :]
        return bits, logp

    def full_pass_cache(self, configs) -> SequenceCache:
        bits = self._as_batch(configs)
        cats = self.group_categories(bits)
        xs = self.group_inputs(bits)
        x = affine(constant(xs), self._embed_w, self._embed_b)
        x = add(x, constant(self._posenc))
        cell_kv = []
        for cell in self._cells:
            x, kv = nets.transformer_cell(x, cell, self.config.n_heads)
            cell_kv.append(kv)
        logp = select_index(log_softmax(nets.projection_head(x, self._head)), cats).value
        prefix = np.zeros((bits.shape[0], self.n_groups + 1))
        np.cumsum(logp, axis=1, out=prefix[:, 1:])
        return SequenceCache(
            config=bits.copy(),
            prefix_logp=prefix,
            log_psi=0.5 * prefix[:, -1],
            cell_kv=cell_kv,
        )

    def log_amplitude_suffix(self, configs, cache, start_group: int):
        bits = self._as_batch(configs)
        self._check_prefix(bits, cache, start_group)
        cats = self.group_categories(bits)
        xs = self.group_inputs(bits, start=start_group)
        prefixes = [
            (k[:, :, :start_group], v[:, :, :start_group]) for k, v in cache.cell_kv
        ]
        y, _ = self._trunk_block(xs, start_group, prefixes)
        logp = select_index(
            log_softmax(nets.projection_head(y, self._head)), cats[:, start_group:]
        ).value
        return 0.5 * (cache.prefix_logp[:, start_group] + logp.sum(axis=1))


class Lptf(_TransformerTrunk):
    """Large patched transformer: transformer trunk over big patches, each
    decoded by a GRU over sub-patches seeded with the trunk output."""

    def _build(self, rng, bound):
        self._build_trunk(rng, bound)
        self.sub_size = self.scheme.sub_size
        self.n_sub = self.patch_size // self.sub_size
        self.sub_categories = 1 << self.sub_size
        self._sub_positions = sub_patch_positions(self.scheme)
        self._sub_pow2 = 1 << np.arange(self.sub_size, dtype=np.int64)
        self._sub_gru = self._register_gru("sub.gru", self.sub_size, rng, bound)
        self._sub_head = self._register_head("sub.head", self.sub_categories, rng, bound)

    def _sub_inputs_cats(self, patch_bits: np.ndarray):
        """(B, p) patch bits -> sub inputs (B, n_sub, p_s) and categories (B, n_sub)."""
        n = patch_bits.shape[0]
        sub_bits = np.stack(
            [patch_bits[:, pos] for pos in self._sub_positions], axis=1
        )  # (B, n_sub, p_s)
        cats = sub_bits.astype(np.int64) @ self._sub_pow2
        xs = np.zeros((n, self.n_sub, self.sub_size))
        xs[:, 1:] = sub_bits[:, :-1]
        return xs, cats

    def _decode_logp(self, h_tf: Tensor, patch_bits: np.ndarray) -> Tensor:
        """Log-probability of observed patch states given trunk outputs.

        ``h_tf``: (M, d_hidden) for M independent positions; ``patch_bits``
        (M, p). Returns (M,) log p.
        """
        xs, cats = self._sub_inputs_cats(patch_bits)
        h = h_tf
        acc = None
        for k in range(self.n_sub):
            h = nets.gru_step(constant(xs[:, k]), h, self._sub_gru)
            logits = nets.projection_head(h, self._sub_head)
            logp_k = select_index(log_softmax(logits), cats[:, k])
            acc = logp_k if acc is None else add(acc, logp_k)
        return acc

    def log_amplitude(self, configs) -> Tensor:
        bits = self._as_batch(configs)
        n = bits.shape[0]
        y = self._trunk_full(self.group_inputs(bits))  # (B, L, d_h)
        flat = reshape(y, (n * self.n_groups, self.config.d_hidden))
        patch_bits = np.stack(
            [bits[:, idx] for idx in self.groups], axis=1
        ).reshape(n * self.n_groups, self.patch_size)
        logp = self._decode_logp(flat, patch_bits)  # (B*L,)
        return scale(asum(reshape(logp, (n, self.n_groups)), axis=1), 0.5)

    def _sample_patch(self, h_tf: Tensor, rng: np.random.Generator):
        """Sample one big patch given trunk outputs (B, d_hidden)."""
        n = h_tf.value.shape[0]
        patch_bits = np.zeros((n, self.patch_size), dtype=np.uint8)
        logp = np.zeros(n)
        h = h_tf
        x = np.zeros((n, self.sub_size))
        rows = np.arange(n)
        for k in range(self.n_sub):
            h = nets.gru_step(constant(x), h, self._sub_gru)
            probs = softmax(nets.projection_head(h, self._sub_head)).value
            cats = _sample_categories(probs, rng)
            logp += np.log(probs[rows, cats])
            sub_bits = _bits_of(cats, self.sub_size)
            patch_bits[:, self._sub_positions[k]] = sub_bits
            x = sub_bits.astype(np.float64)
        return patch_bits, logp

    def sample(self, n_chains: int, rng: np.random.Generator):
        bits = np.zeros((n_chains, self.n_atoms), dtype=np.uint8)
        logp = np.zeros(n_chains)
        kv = [None] * self.config.n_cells
        x = np.zeros((n_chains, 1, self.patch_size))
        for t in range(self.n_groups):
            y, kv = self._trunk_block(x, t, kv)
            h_tf = reshape(y, (n_chains, self.config.d_hidden))
            patch_bits, logp_t = self._sample_patch(h_tf, rng)
            logp += logp_t
            bits[:, self.groups[t]] = patch_bits
            x = patch_bits.astype(np.float64)[:, None, :]
        return bits, logp

    def full_pass_cache(self, configs) -> SequenceCache:
        bits = self._as_batch(configs)
        n = bits.shape[0]
        xs = self.group_inputs(bits)
        x = affine(constant(xs), self._embed_w, self._embed_b)
        x = add(x, constant(self._posenc))
        cell_kv = []
        for cell in self._cells:
            x, kv = nets.transformer_cell(x, cell, self.config.n_heads)
            cell_kv.append(kv)
        flat = reshape(x, (n * self.n_groups, self.config.d_hidden))
        patch_bits = np.stack(
            [bits[:, idx] for idx in self.groups], axis=1
        ).reshape(n * self.n_groups, self.patch_size)
        logp = self._decode_logp(flat, patch_bits).value.reshape(n, self.n_groups)
        prefix = np.zeros((n, self.n_groups + 1))
        np.cumsum(logp, axis=1, out=prefix[:, 1:])
        return SequenceCache(
            config=bits.copy(),
            prefix_logp=prefix,
            log_psi=0.5 * prefix[:, -1],
            cell_kv=cell_kv,
        )

    def log_amplitude_suffix(self, configs, cache, start_group: int):
        bits = self._as_batch(configs)
        self._check_prefix(bits, cache, start_group)
        n = bits.shape[0]
        n_new = self.n_groups - start_group
        xs = self.group_inputs(bits, start=start_group)
        prefixes = [
            (k[:, :, :start_group], v[:, :, :start_group]) for k, v in cache.cell_kv
        ]
        y, _ = self._trunk_block(xs, start_group, prefixes)
        flat = reshape(y, (n * n_new, self.config.d_hidden))
        patch_bits = np.stack(
            [bits[:, idx] for idx in self.groups[start_group:]], axis=1
        ).reshape(n * n_new, self.patch_size)
        logp = self._decode_logp(flat, patch_bits).value.reshape(n, n_new)
        return 0.5 * (cache.prefix_logp[:, start_group] + logp.sum(axis=1))


_MODEL_CLASSES = {
    "rnn": PatchedRnn,
    "patched_rnn": PatchedRnn,
    "patched_tf": PatchedTransformer,
    "lptf": Lptf,
}


def init_model(config: ModelConfig) -> Wavefunction:
    """Build a model with seeded uniform [-1/sqrt(d_hidden), +1/sqrt(d_hidden)]
    weights, zero biases, and unit norm gains. Identical (config, seed) pairs
    reproduce identical parameters bit for bit."""
    return _MODEL_CLASSES[config.kind](config)


def count_parameters(model: Wavefunction) -> int:
    """Exact number of trainable scalars in the model."""
    return model.count_parameters()


def log_amplitude_batch(
    model: Wavefunction, configs: np.ndarray, chunk_size: int = 2048
) -> np.ndarray:
    """log psi over many configurations, evaluated in memory-bounded chunks."""
    configs = np.asarray(configs, dtype=np.uint8)
    out = np.empty(configs.shape[0])
    for lo in range(0, configs.shape[0], chunk_size):
        hi = min(lo + chunk_size, configs.shape[0])
        out[lo:hi] = model.log_amplitude(configs[lo:hi]).value
    return out
