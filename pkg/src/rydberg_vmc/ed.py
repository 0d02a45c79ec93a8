"""Exact diagonalization oracle for small lattices (N <= 20).

The Hamiltonian acts on the 2^N occupation basis indexed little-endian over
row-major atom order (bit i of the basis index = occupation of atom i), the
same convention the wavefunction models and patch encodings use, so model
enumeration and exact results share indexing with no permutation step.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .lattice import (
    HamiltonianSpec,
    LatticeSpec,
    all_configurations,
    staggered_magnetization,
)
from .wavefunction import Wavefunction, log_amplitude_batch

__all__ = [
    "EdResult",
    "OracleSizeError",
    "ed_ground_state",
    "ed_expectation",
    "enumerate_normalization",
    "fidelity",
    "save_ed_result",
    "load_ed_result",
]

MAX_ED_ATOMS = 20
MAX_ENUM_ATOMS = 16
DENSE_CUTOFF = 12

_ED_MAGIC = b"RVMC-ED1"


class OracleSizeError(ValueError):
    """Lattice too large for an exact-enumeration oracle."""


@dataclass(frozen=True)
class EdResult:
    """Ground energy and the (sign-fixed, normalized) amplitude vector."""

    ground_energy: float
    amplitudes: np.ndarray  # (2^N,), nonnegative, unit 2-norm

    @property
    def n_atoms(self) -> int:
        return int(round(np.log2(self.amplitudes.size)))


def _diagonal_vector(lattice: LatticeSpec, ham: HamiltonianSpec) -> np.ndarray:
    """Diagonal matrix elements over the whole basis, in chunks."""
    n = lattice.n_atoms
    size = 1 << n
    diag = np.empty(size)
    chunk = 1 << min(n, 16)
    idx = np.arange(size, dtype=np.int64)
    for lo in range(0, size, chunk):
        hi = min(lo + chunk, size)
        bits = ((idx[lo:hi, None] >> np.arange(n)) & 1).astype(np.float64)
        occ = bits.sum(axis=1)
        pair = 0.5 * np.einsum("bi,ij,bj->b", bits, ham.vmat, bits)
        diag[lo:hi] = -ham.delta * occ + pair
    return diag


def _dense_hamiltonian(lattice: LatticeSpec, ham: HamiltonianSpec) -> np.ndarray:
    n = lattice.n_atoms
    size = 1 << n
    mat = np.diag(_diagonal_vector(lattice, ham))
    idx = np.arange(size)
    for i in range(n):
        mat[idx, idx ^ (1 << i)] = -0.5 * ham.omega
    return mat


def ed_ground_state(lattice: LatticeSpec, ham: HamiltonianSpec) -> EdResult:
    """Extremal eigenpair of the Rydberg Hamiltonian on the full basis.

    Dense diagonalization up to ``DENSE_CUTOFF`` atoms, matrix-free iterative
    solve above that. The residual ||H v - E0 v|| is verified below 1e-10.
    """
    n = lattice.n_atoms
    if n > MAX_ED_ATOMS:
        raise OracleSizeError(f"exact diagonalization capped at {MAX_ED_ATOMS} atoms, got {n}")
    if ham.n_atoms != n:
        raise ValueError("hamiltonian and lattice sizes disagree")
    size = 1 << n
    diag = _diagonal_vector(lattice, ham)

    if n <= DENSE_CUTOFF:
        mat = _dense_hamiltonian(lattice, ham)
        energies, vectors = np.linalg.eigh(mat)
        energy, vec = energies[0], vectors[:, 0]
    else:
        idx = np.arange(size, dtype=np.int64)
        half_omega = 0.5 * ham.omega

        def matvec(v):
            out = diag * v
            for i in range(n):
                out -= half_omega * v[idx ^ (1 << i)]
            return out

        op = LinearOperator((size, size), matvec=matvec, dtype=np.float64)
        # Strictly positive start vector overlaps the stoquastic ground state.
        v0 = np.full(size, 1.0 / np.sqrt(size))
        vals, vecs = eigsh(op, k=1, which="SA", v0=v0, maxiter=5000)
        energy, vec = vals[0], vecs[:, 0]

    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    vec = vec / np.linalg.norm(vec)

    if n <= DENSE_CUTOFF:
        residual = np.linalg.norm(mat @ vec - energy * vec)
    else:
        residual = np.linalg.norm(matvec(vec) - energy * vec)
    if residual > 1e-10:
        raise RuntimeError(f"eigensolver residual {residual:.2e} above 1e-10")
    return EdResult(ground_energy=float(energy), amplitudes=vec)


def ed_expectation(result: EdResult, observable, lattice: LatticeSpec) -> float:
    """Exact expectation of a diagonal observable: sum_s amp(s)^2 O(s).

    ``observable`` is 'staggered_magnetization', 'occupation', or a callable
    mapping a batch of configurations to per-configuration values.
    """
    bits = all_configurations(lattice.n_atoms)
    if observable == "staggered_magnetization":
        values = staggered_magnetization(bits, lattice)
    elif observable == "occupation":
        values = bits.astype(np.float64).mean(axis=1)
    elif callable(observable):
        values = np.asarray(observable(bits), dtype=np.float64)
    else:
        raise ValueError(f"unknown observable {observable!r}")
    return float(result.amplitudes**2 @ values)


def enumerate_normalization(model: Wavefunction, chunk_size: int = 2048) -> float:
    """Sum of |psi|^2 over the entire basis (should be 1 for any model)."""
    n = model.n_atoms
    if n > MAX_ENUM_ATOMS:
        raise OracleSizeError(f"enumeration capped at {MAX_ENUM_ATOMS} atoms, got {n}")
    total = 0.0
    configs = all_configurations(n)
    for lo in range(0, configs.shape[0], chunk_size):
        logpsi = model.log_amplitude(configs[lo : lo + chunk_size]).value
        total += float(np.exp(2.0 * logpsi).sum())
    return total


def fidelity(model: Wavefunction, ed: EdResult) -> float:
    """Squared overlap (sum_s psi(s) * amp(s))^2 between model and exact state."""
    n = model.n_atoms
    if n > MAX_ENUM_ATOMS:
        raise OracleSizeError(f"fidelity enumeration capped at {MAX_ENUM_ATOMS} atoms, got {n}")
    if ed.amplitudes.size != (1 << n):
        raise ValueError("exact amplitudes do not match the model's lattice size")
    logpsi = log_amplitude_batch(model, all_configurations(n))
    return float(np.exp(logpsi) @ ed.amplitudes) ** 2


def save_ed_result(result: EdResult, path) -> None:
    """Versioned binary dump: magic, version, N, energy, amplitudes, CRC32."""
    payload = (
        _ED_MAGIC
        + struct.pack("<IId", 1, result.n_atoms, result.ground_energy)
        + result.amplitudes.astype("<f8").tobytes()
    )
    with open(path, "wb") as fh:
        fh.write(payload + struct.pack("<I", zlib.crc32(payload)))


def load_ed_result(path) -> EdResult:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_ED_MAGIC) + 20 or blob[: len(_ED_MAGIC)] != _ED_MAGIC:
        raise ValueError(f"{path}: not an exact-diagonalization dump")
    payload, crc = blob[:-4], struct.unpack("<I", blob[-4:])[0]
    if zlib.crc32(payload) != crc:
        raise ValueError(f"{path}: checksum mismatch (truncated or corrupt)")
    version, n, energy = struct.unpack_from("<IId", payload, len(_ED_MAGIC))
    if version != 1:
        raise ValueError(f"{path}: unsupported format version {version}")
    amps = np.frombuffer(payload, dtype="<f8", offset=len(_ED_MAGIC) + 16)
    if amps.size != 1 << n:
        raise ValueError(f"{path}: amplitude count {amps.size} != 2^{n}")
    return EdResult(ground_energy=energy, amplitudes=amps.astype(np.float64))
