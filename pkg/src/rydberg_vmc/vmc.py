"""Sampling-based energy estimation and variational training.

The off-diagonal part of the Rydberg Hamiltonian couples a configuration to
its N single-flip neighbours, so each local energy needs N wavefunction
ratios. ``local_energy`` evaluates them naively through any log-amplitude
callable; ``local_energies_grouped`` reuses cached prefix network states so
that a flip inside part d of the sequence only recomputes the suffix starting
at that part, splitting the atom sequence into D equal parts (default: one
part per patch group).

Training follows the two-pass scheme: sample without gradients, evaluate the
local energies without gradients, then re-run the sampled configurations in
recorded mini-batches and descend the surrogate loss
``(2 / N_s) * sum_s (E_loc(s) - <E>) * log psi(s)`` with Adam.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .autodiff import asum, backward, constant, mul, record, zero_grad
from .lattice import HamiltonianSpec, diagonal_energy, staggered_magnetization
from .optim import AdamState, TrainingFault, adam_update
from .wavefunction import Wavefunction

__all__ = [
    "EnergyEstimate",
    "TrainConfig",
    "TrainState",
    "energy_estimate",
    "local_energy",
    "local_energy_grouped",
    "local_energies_grouped",
    "training_step",
    "train",
    "measure_observable",
    "METRICS_HEADER",
]

METRICS_HEADER = "iteration,energy_mean,energy_var,energy_stderr,seconds,n_samples"


@dataclass(frozen=True)
class EnergyEstimate:
    """Sample mean, population variance, and standard error of one batch."""

    mean: float
    variance: float
    std_error: float
    n_samples: int


def energy_estimate(values) -> EnergyEstimate:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("energy estimate over an empty sample list")
    mean = float(values.mean())
    var = float(values.var())
    return EnergyEstimate(
        mean=mean,
        variance=var,
        std_error=float(np.sqrt(var / values.size)),
        n_samples=values.size,
    )


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters (paper-style defaults)."""

    iterations: int
    n_samples: int = 512
    mini_batch: int = 256
    learning_rate: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    d_split: int | None = None  # None -> one part per patch group
    seed: int = 1
    checkpoint_every: int = 0  # 0 -> only at the end

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.mini_batch > self.n_samples:
            raise ValueError(
                f"mini_batch {self.mini_batch} exceeds n_samples {self.n_samples}"
            )
        if self.n_samples % self.mini_batch:
            raise ValueError(
                f"n_samples {self.n_samples} not divisible by mini_batch {self.mini_batch}"
            )


def local_energy(log_psi_fn, config, ham: HamiltonianSpec, return_terms: bool = False):
    """Local energy through an arbitrary log-amplitude callable.

    ``diagonal_energy(config) - (omega/2) * sum_i exp(logpsi(flip_i) - logpsi)``
    over all N single-atom flips; the reference evaluation path for the
    grouped fast path.
    """
    config = np.asarray(config, dtype=np.uint8)
    n = config.shape[-1]
    base = float(log_psi_fn(config))
    ratios = np.empty(n)
    for i in range(n):
        flipped = config.copy()
        flipped[i] ^= 1
        ratios[i] = np.exp(float(log_psi_fn(flipped)) - base)
    bad = np.flatnonzero(~np.isfinite(ratios))
    if bad.size:
        raise TrainingFault(f"non-finite wavefunction ratio at flip index {bad[0]}")
    value = float(diagonal_energy(config, ham)) - 0.5 * ham.omega * ratios.sum()
    return (value, ratios) if return_terms else value


def _tile_cache(cache, k: int):
    """Repeat a pass cache k times along the chain axis (for batched flips)."""
    from .wavefunction import SequenceCache

    def rep(a):
        return None if a is None else np.concatenate([a] * k, axis=0)

    return SequenceCache(
        config=rep(cache.config),
        prefix_logp=rep(cache.prefix_logp),
        log_psi=rep(cache.log_psi),
        hidden=rep(cache.hidden),
        cell_kv=[(rep(kk), rep(vv)) for kk, vv in cache.cell_kv],
    )


def local_energies_grouped(
    model: Wavefunction,
    configs,
    ham: HamiltonianSpec,
    d_split: int | None = None,
    return_terms: bool = False,
):
    """Local energies for a batch of configurations with D-split suffix reuse.

    The atom sequence is split into ``d_split`` equal parts of patch groups;
    a full pass snapshots the network state at every group boundary, and each
    flip inside part d re-evaluates the sequence only from the start of that
    part. Every configuration still contributes exactly N flip ratios.
    """
    n_groups = model.n_groups
    d = n_groups if d_split is None else int(d_split)
    if d < 1 or n_groups % d:
        raise ValueError(f"d_split {d} must divide the {n_groups}-group sequence")
    groups_per_part = n_groups // d
    bits = model._as_batch(configs)
    cache = model.full_pass_cache(bits)
    ratios = np.empty((bits.shape[0], model.n_atoms))
    for part in range(d):
        g0 = part * groups_per_part
        part_atoms = np.concatenate(model.groups[g0 : g0 + groups_per_part])
        # all flips of this part share the cached prefix, so they run as one
        # wide suffix pass of len(part_atoms) * B chains
        k = part_atoms.size
        tiled = np.broadcast_to(bits, (k,) + bits.shape).copy()
        for j, atom in enumerate(part_atoms):
            tiled[j, :, atom] ^= 1
        logpsi = model.log_amplitude_suffix(
            tiled.reshape(k * bits.shape[0], model.n_atoms), _tile_cache(cache, k), g0
        ).reshape(k, bits.shape[0])
        ratios[:, part_atoms] = np.exp(logpsi - cache.log_psi).T
    if not np.all(np.isfinite(ratios)):
        bad = np.argwhere(~np.isfinite(ratios))[0]
        raise TrainingFault(
            f"non-finite wavefunction ratio at sample {bad[0]}, flip index {bad[1]}"
        )
    values = diagonal_energy(bits, ham) - 0.5 * ham.omega * ratios.sum(axis=1)
    return (values, ratios) if return_terms else values


def local_energy_grouped(
    model: Wavefunction, config, ham: HamiltonianSpec, d_split: int | None = None
) -> float:
    """Single-configuration D-split local energy; equals :func:`local_energy`
    through the model's log-amplitude within 1e-10."""
    values = local_energies_grouped(model, np.atleast_2d(config), ham, d_split)
    return float(values[0])


@dataclass
class TrainState:
    """Mutable training companions: optimizer moments and the sampling stream."""

    adam: AdamState
    rng: np.random.Generator


def _surrogate_gradients(model, samples, coeff, mini_batch):
    """Accumulate d/dW of (2/N_s) sum_s c_s log psi(s) across mini-batches."""
    zero_grad(model.params)
    for lo in range(0, samples.shape[0], mini_batch):
        batch = samples[lo : lo + mini_batch]
        c = coeff[lo : lo + mini_batch]
        with record():
            logpsi = model.log_amplitude(batch)
            loss = asum(mul(constant(c), logpsi))
            if not np.isfinite(loss.value):
                raise TrainingFault(
                    f"non-finite surrogate loss in mini-batch starting at sample {lo}"
                )
            backward(loss)
    return {name: p.grad_array() for name, p in model.params.items()}


def training_step(
    model: Wavefunction,
    ham: HamiltonianSpec,
    tcfg: TrainConfig,
    state: TrainState,
) -> EnergyEstimate:
    """One variational step: sample, estimate, backpropagate, Adam update."""
    samples, _ = model.sample(tcfg.n_samples, state.rng)
    eloc = local_energies_grouped(model, samples, ham, tcfg.d_split)
    est = energy_estimate(eloc)
    if not np.isfinite(est.mean):
        raise TrainingFault("non-finite energy estimate; aborting step")
    coeff = (2.0 / tcfg.n_samples) * (eloc - est.mean)
    grads = _surrogate_gradients(model, samples, coeff, tcfg.mini_batch)
    adam_update(
        model.params,
        grads,
        state.adam,
        lr=tcfg.learning_rate,
        beta1=tcfg.beta1,
        beta2=tcfg.beta2,
        eps=tcfg.eps,
    )
    return est


def train(
    model: Wavefunction,
    ham: HamiltonianSpec,
    tcfg: TrainConfig,
    metrics_sink=None,
    checkpoint_fn=None,
    state: TrainState | None = None,
):
    """Run ``tcfg.iterations`` training steps.

    Appends one row per iteration to ``metrics_sink`` (a file-like object;
    the header row is written first) and invokes
    ``checkpoint_fn(model, state, iteration)`` every ``checkpoint_every``
    iterations and once at the end. Returns ``(history, state)`` where
    history is a list of (iteration, EnergyEstimate, seconds) tuples.
    """
    if state is None:
        state = TrainState(adam=AdamState(model.params), rng=np.random.default_rng(tcfg.seed))
    if metrics_sink is not None:
        metrics_sink.write(METRICS_HEADER + "\n")
    history = []
    for it in range(1, tcfg.iterations + 1):
        t0 = time.perf_counter()
        est = training_step(model, ham, tcfg, state)
        seconds = time.perf_counter() - t0
        history.append((it, est, seconds))
        if metrics_sink is not None:
            metrics_sink.write(
                f"{it},{est.mean!r},{est.variance!r},{est.std_error!r},"
                f"{seconds:.6f},{est.n_samples}\n"
            )
            metrics_sink.flush()
        if checkpoint_fn is not None and tcfg.checkpoint_every and it % tcfg.checkpoint_every == 0:
            checkpoint_fn(model, state, it)
    if checkpoint_fn is not None:
        checkpoint_fn(model, state, tcfg.iterations)
    return history, state


def measure_observable(
    model: Wavefunction,
    n_samples: int,
    rng: np.random.Generator,
    observable=None,
) -> EnergyEstimate:
    """Sample mean and standard error of a diagonal observable over fresh draws.

    ``observable`` maps a (B, N) batch of configurations to per-configuration
    values; defaults to the staggered magnetization of the model's lattice.
    """
    samples, _ = model.sample(n_samples, rng)
    if observable is None:
        values = staggered_magnetization(samples, model.lattice)
    else:
        values = np.asarray(observable(samples), dtype=np.float64)
    return energy_estimate(values)
