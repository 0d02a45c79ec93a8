"""Square-lattice Rydberg arrays: geometry, Hamiltonian data, and observables.

Conventions used throughout the package:

* Atoms live on a ``rows x cols`` grid with unit spacing and open boundaries,
  indexed row-major: atom ``i`` sits at ``(i // cols, i % cols)``.
* A spin configuration is a length-N vector over {0, 1} (0 = ground,
  1 = Rydberg), stored as a plain numpy array in the same row-major order.
* Basis/patch encodings are little-endian: bit k of an index corresponds to
  the k-th entry of the (row-major) bit vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LatticeSpec",
    "HamiltonianSpec",
    "PatchScheme",
    "interaction_matrix",
    "build_hamiltonian",
    "diagonal_energy",
    "staggered_magnetization",
    "patch_order",
    "encode_patch",
    "decode_patch",
    "all_configurations",
    "config_index",
]


@dataclass(frozen=True)
class LatticeSpec:
    """Rectangular array of Rydberg atoms with unit spacing, open boundaries."""

    rows: int
    cols: int
    spacing: float = 1.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"lattice must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def n_atoms(self) -> int:
        return self.rows * self.cols

    def positions(self) -> np.ndarray:
        """(N, 2) array of atom coordinates in row-major order."""
        r, c = np.divmod(np.arange(self.n_atoms), self.cols)
        return self.spacing * np.stack([r, c], axis=1).astype(np.float64)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Rydberg Hamiltonian parameters plus the precomputed interaction matrix.

    The diagonal part of the Hamiltonian is ``-delta * sum_i n_i +
    sum_{i<j} vmat[i, j] n_i n_j``; the off-diagonal part couples
    configurations differing in one occupation with amplitude ``-omega / 2``.
    """

    omega: float
    delta: float
    rb: float
    vmat: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.vmat, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"vmat must be square, got shape {v.shape}")
        if np.any(np.diag(v) != 0.0):
            raise ValueError("vmat must have a zero diagonal")
        if not np.allclose(v, v.T):
            raise ValueError("vmat must be symmetric")
        object.__setattr__(self, "vmat", v)

    @property
    def n_atoms(self) -> int:
        return self.vmat.shape[0]


@dataclass(frozen=True)
class PatchScheme:
    """Patch geometry: ``patch_rows x patch_cols`` atoms form one sequence
    element; the LPTF additionally decodes each patch in
    ``sub_rows x sub_cols`` sub-patches."""

    patch_rows: int
    patch_cols: int
    sub_rows: int = 0
    sub_cols: int = 0

    def __post_init__(self):
        if self.patch_rows < 1 or self.patch_cols < 1:
            raise ValueError("patch dimensions must be positive")
        # Unset sub-patch defaults to the whole patch (degenerate split).
        if self.sub_rows == 0:
            object.__setattr__(self, "sub_rows", self.patch_rows)
        if self.sub_cols == 0:
            object.__setattr__(self, "sub_cols", self.patch_cols)
        if self.sub_rows < 1 or self.sub_cols < 1:
            raise ValueError("sub-patch dimensions must be positive")
        if self.patch_rows % self.sub_rows or self.patch_cols % self.sub_cols:
            raise ValueError(
                f"patch {self.patch_rows}x{self.patch_cols} does not divide into "
                f"sub-patches {self.sub_rows}x{self.sub_cols}"
            )

    @property
    def patch_size(self) -> int:
        return self.patch_rows * self.patch_cols

    @property
    def sub_size(self) -> int:
        return self.sub_rows * self.sub_cols

    def validate_lattice(self, lattice: LatticeSpec) -> None:
        if lattice.rows % self.patch_rows or lattice.cols % self.patch_cols:
            raise ValueError(
                f"lattice {lattice.rows}x{lattice.cols} is not divisible by "
                f"patch {self.patch_rows}x{self.patch_cols}"
            )


def interaction_matrix(lattice: LatticeSpec, omega: float, rb: float) -> np.ndarray:
    """Van-der-Waals interaction ``V[i, j] = omega * rb^6 / d(i, j)^6``.

    All pairs are included (no distance cutoff); the diagonal is zero.
    """
    pos = lattice.positions()
    diff = pos[:, None, :] - pos[None, :, :]
    d2 = np.sum(diff * diff, axis=-1)
    np.fill_diagonal(d2, 1.0)  # avoid 0/0; diagonal zeroed below
    v = omega * rb**6 / d2**3
    np.fill_diagonal(v, 0.0)
    return v


def build_hamiltonian(
    lattice: LatticeSpec, omega: float, delta: float, rb: float
) -> HamiltonianSpec:
    """Assemble a :class:`HamiltonianSpec` for the given lattice and couplings."""
    return HamiltonianSpec(
        omega=omega, delta=delta, rb=rb, vmat=interaction_matrix(lattice, omega, rb)
    )


def _check_config(bits: np.ndarray, n_atoms: int) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape[-1] != n_atoms:
        raise ValueError(
            f"configuration has {bits.shape[-1]} sites, expected {n_atoms}"
        )
    return bits


def diagonal_energy(config, ham: HamiltonianSpec):
    """Diagonal Hamiltonian matrix element of one configuration (or a batch).

    Returns ``-delta * sum_i n_i + sum_{i<j} V[i, j] n_i n_j``, the pair sum
    running over unique pairs.
    """
    bits = _check_config(config, ham.n_atoms).astype(np.float64)
    occ = bits.sum(axis=-1)
    # sum_{i<j} V n_i n_j = n V n^T / 2 for symmetric V with zero diagonal
    pair = 0.5 * np.einsum("...i,ij,...j->...", bits, ham.vmat, bits)
    return -ham.delta * occ + pair


def staggered_magnetization(config, lattice: LatticeSpec):
    """Checkerboard order parameter of one configuration (or a batch).

    ``|sum_i s_i (n_i - 1/2)| / N`` with sublattice sign
    ``s_i = (-1)^(row + col)``; always in [0, 1/2].
    """
    bits = _check_config(config, lattice.n_atoms).astype(np.float64)
    r, c = np.divmod(np.arange(lattice.n_atoms), lattice.cols)
    signs = np.where((r + c) % 2 == 0, 1.0, -1.0)
    return np.abs((bits - 0.5) @ signs) / lattice.n_atoms


def patch_order(lattice: LatticeSpec, scheme: PatchScheme) -> list[np.ndarray]:
    """Atom-index groups visited by the autoregressive sequence.

    Patches are enumerated row-major over the patch grid; atoms within a
    patch are row-major. The concatenation of all groups is a permutation
    of ``0 .. N-1``.
    """
    scheme.validate_lattice(lattice)
    pr, pc = scheme.patch_rows, scheme.patch_cols
    groups = []
    for gr in range(lattice.rows // pr):
        for gc in range(lattice.cols // pc):
            idx = [
                (gr * pr + r) * lattice.cols + (gc * pc + c)
                for r in range(pr)
                for c in range(pc)
            ]
            groups.append(np.asarray(idx, dtype=np.intp))
    return groups


def sub_patch_positions(scheme: PatchScheme) -> list[np.ndarray]:
    """Index groups *within* a flattened patch, one per sub-patch.

    Sub-patches are row-major over the sub-patch grid; positions within a
    sub-patch are row-major, mirroring :func:`patch_order` one level down.
    """
    pr, pc = scheme.patch_rows, scheme.patch_cols
    sr, sc = scheme.sub_rows, scheme.sub_cols
    groups = []
    for gr in range(pr // sr):
        for gc in range(pc // sc):
            idx = [
                (gr * sr + r) * pc + (gc * sc + c)
                for r in range(sr)
                for c in range(sc)
            ]
            groups.append(np.asarray(idx, dtype=np.intp))
    return groups


def encode_patch(bits) -> int:
    """Map patch bits to an integer, little-endian: index = sum_k bits[k] 2^k."""
    bits = np.asarray(bits)
    return int(bits @ (1 << np.arange(bits.shape[-1], dtype=np.int64)))


def decode_patch(index: int, n_bits: int) -> np.ndarray:
    """Inverse of :func:`encode_patch`; raises if index is out of range."""
    if not 0 <= index < (1 << n_bits):
        raise ValueError(f"patch index {index} out of range for {n_bits} bits")
    return (index >> np.arange(n_bits)) & 1


def all_configurations(n_atoms: int) -> np.ndarray:
    """(2^N, N) array of every configuration, row ``b`` holding the bits of
    basis index ``b`` (little-endian over row-major atom order)."""
    idx = np.arange(1 << n_atoms, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n_atoms)) & 1).astype(np.uint8)


def config_index(config) -> np.ndarray:
    """Basis index of one configuration (or a batch), inverse of
    :func:`all_configurations` row order."""
    bits = np.asarray(config, dtype=np.int64)
    return bits @ (1 << np.arange(bits.shape[-1], dtype=np.int64))
