"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from rydberg_vmc import LatticeSpec, ModelConfig, PatchScheme, init_model
from rydberg_vmc.autodiff import asum, backward, constant, mul, record, zero_grad


def fd_gradient(loss_value, array, h=1e-5):
    """Central finite differences of a scalar callable w.r.t. an array,
    mutating entries in place. The reference oracle for every backward test."""
    grad = np.empty_like(array)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + h
        fp = loss_value()
        flat[k] = old - h
        fm = loss_value()
        flat[k] = old
        gflat[k] = (fp - fm) / (2.0 * h)
    return grad


def rel_err(a, b, floor=1e-7):
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return np.max(np.abs(a - b) / denom)


def randomize_params(model, seed=42, scale=0.4):
    """Give every parameter (biases included) a random value so the forward
    pass sits away from relu kinks; fresh models have exact zeros there."""
    rng = np.random.default_rng(seed)
    for p in model.params.values():
        p.value[...] = rng.normal(size=p.value.shape) * scale


def make_model(kind, rows=2, cols=2, patch=(1, 1), sub=(0, 0), d_hidden=8, seed=3, **kw):
    config = ModelConfig(
        kind=kind,
        lattice=LatticeSpec(rows, cols),
        scheme=PatchScheme(patch[0], patch[1], sub[0], sub[1]),
        d_hidden=d_hidden,
        d_ff=kw.pop("d_ff", 16),
        n_cells=kw.pop("n_cells", 2),
        n_heads=kw.pop("n_heads", 2),
        seed=seed,
        **kw,
    )
    return init_model(config)


SMALL_SETUPS = [
    ("rnn", dict(patch=(1, 1))),
    ("patched_rnn", dict(patch=(2, 2))),
    ("patched_tf", dict(patch=(2, 2))),
    ("lptf", dict(patch=(2, 2), sub=(1, 2))),
]


@pytest.fixture(params=SMALL_SETUPS, ids=[k for k, _ in SMALL_SETUPS])
def small_model(request):
    kind, kw = request.param
    return make_model(kind, **kw)


def surrogate_gradient_dict(model, configs, coeff):
    """Backprop gradient of sum_s coeff_s * log psi(s) for every block."""
    zero_grad(model.params)
    with record():
        loss = asum(mul(constant(coeff), model.log_amplitude(configs)))
        backward(loss)
    return {name: p.grad_array() for name, p in model.params.items()}
