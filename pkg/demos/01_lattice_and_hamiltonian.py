"""Rydberg lattices and their Hamiltonian data.

Builds a small square array, inspects the van-der-Waals interaction matrix,
evaluates diagonal energies of hand-picked configurations, and shows the
staggered magnetization distinguishing the checkerboard states.
"""

import numpy as np

from rydberg_vmc import (
    LatticeSpec,
    build_hamiltonian,
    diagonal_energy,
    staggered_magnetization,
)

lat = LatticeSpec(rows=4, cols=4)
print(f"lattice: {lat.rows}x{lat.cols}, N = {lat.n_atoms} atoms, unit spacing\n")

# Rabi frequency 1 sets the energy scale; rb = 7^(1/6) makes the
# nearest-neighbour interaction exactly 7.
ham = build_hamiltonian(lat, omega=1.0, delta=1.0, rb=7.0 ** (1 / 6))
print("interaction matrix entries from atom 0 (top-left corner):")
print(np.array2string(ham.vmat[0].reshape(4, 4), precision=4, suppress_small=True))
print()

empty = np.zeros(16, dtype=np.uint8)
single = empty.copy()
single[5] = 1
pair = empty.copy()
pair[[5, 6]] = 1  # nearest neighbours: blockade penalty 7
r, c = np.divmod(np.arange(16), 4)
checker = ((r + c) % 2 == 0).astype(np.uint8)

print("diagonal energies (-delta * occupation + pair interactions):")
for name, config in [
    ("empty", empty),
    ("one excitation", single),
    ("nearest-neighbour pair", pair),
    ("checkerboard", checker),
]:
    e = diagonal_energy(config, ham)
    m = staggered_magnetization(config, lat)
    print(f"  {name:24s} E_diag = {e:+9.4f}   staggered magnetization = {m:.3f}")

print(
    "\nThe checkerboard saturates the order parameter at 1/2; the uniform"
    "\nstates score 0 because the two sublattices cancel."
)
