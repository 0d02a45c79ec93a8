"""Minimal define-by-run reverse-mode differentiation on dense float64 arrays.

A forward pass is recorded on an explicit :class:`Tape` opened with
:func:`record`; primitives executed while a tape is active append backward
closures to it. Outside a tape the same primitives are plain numpy
computations wrapped in :class:`Tensor`, which is what sampling and
local-energy evaluation use. One tape backs exactly one backward sweep;
parameter gradients accumulate across tapes until :func:`zero_grad`.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

__all__ = [
    "Tensor",
    "Tape",
    "AutodiffError",
    "record",
    "backward",
    "zero_grad",
    "constant",
    "add",
    "sub",
    "mul",
    "scale",
    "shift",
    "matmul",
    "affine",
    "sigmoid",
    "tanh",
    "relu",
    "exp",
    "log",
    "softmax",
    "log_softmax",
    "layer_norm",
    "concat",
    "reshape",
    "transpose",
    "select_index",
    "asum",
]


class AutodiffError(RuntimeError):
    pass


class Tensor:
    """Dense float64 array with an optional gradient slot."""

    __slots__ = ("value", "grad", "requires_grad", "_tape")

    def __init__(self, value, requires_grad: bool = False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._tape: Tape | None = None

    @property
    def shape(self):
        return self.value.shape

    def grad_array(self) -> np.ndarray:
        """Gradient as an array; zeros if backward never touched this tensor."""
        return np.zeros_like(self.value) if self.grad is None else self.grad

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"


class Tape:
    """Recorded forward pass: backward closures in execution order."""

    def __init__(self):
        self._entries: list[tuple[Tensor, object]] = []
        self._consumed = False

    def __len__(self):
        return len(self._entries)


_ACTIVE: Tape | None = None


class record:
    """Context manager opening a fresh tape: ``with record() as tape: ...``."""

    def __enter__(self) -> Tape:
        global _ACTIVE
        if _ACTIVE is not None:
            raise AutodiffError("a tape is already recording; tapes do not nest")
        self._tape = Tape()
        _ACTIVE = self._tape
        return self._tape

    def __exit__(self, *exc):
        global _ACTIVE
        _ACTIVE = None
        return False


def backward(loss: Tensor) -> None:
    """Propagate d(loss)/d(tensor) into every tensor the recorded pass touched.

    ``loss`` must be a scalar produced under a :func:`record` block. Parameter
    gradients are accumulated (+=); call :func:`zero_grad` between steps. A
    tape can be swept once; re-running requires re-recording the forward pass.
    """
    tape = loss._tape
    if tape is None:
        raise AutodiffError("backward on a tensor that was not recorded on a tape")
    if tape._consumed:
        raise AutodiffError("tape already consumed; re-record the forward pass")
    if loss.value.size != 1:
        raise AutodiffError(f"loss must be scalar, got shape {loss.value.shape}")
    tape._consumed = True
    loss.grad = np.ones_like(loss.value)
    for out, fn in reversed(tape._entries):
        if out.grad is not None:
            fn(out.grad)


def zero_grad(params) -> None:
    """Clear gradients on an iterable (or dict) of tensors."""
    if isinstance(params, dict):
        params = params.values()
    for p in params:
        p.grad = None


def constant(value) -> Tensor:
    return Tensor(value)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _tracked(t: Tensor) -> bool:
    return t.requires_grad or (t._tape is _ACTIVE and _ACTIVE is not None)


def _accum(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64)  # own a copy; g may be reused
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce gradient ``g`` back to ``shape`` after numpy broadcasting."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _emit(value: np.ndarray, inputs: tuple[Tensor, ...], make_backward) -> Tensor:
    """Build the output tensor; record a backward closure if anything tracks."""
    out = Tensor(value)
    if _ACTIVE is not None and any(_tracked(t) for t in inputs):
        out._tape = _ACTIVE
        _ACTIVE._entries.append((out, make_backward(out)))
    return out


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    value = a.value + b.value
    tracked = (_tracked(a), _tracked(b))

    def bwd(out):
        def fn(g):
            if tracked[0]:
                _accum(a, _unbroadcast(g, a.value.shape))
            if tracked[1]:
                _accum(b, _unbroadcast(g, b.value.shape))

        return fn

    return _emit(value, (a, b), bwd)


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    value = a.value - b.value
    tracked = (_tracked(a), _tracked(b))

    def bwd(out):
        def fn(g):
            if tracked[0]:
                _accum(a, _unbroadcast(g, a.value.shape))
            if tracked[1]:
                _accum(b, _unbroadcast(-g, b.value.shape))

        return fn

    return _emit(value, (a, b), bwd)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    value = a.value * b.value
    tracked = (_tracked(a), _tracked(b))

    def bwd(out):
        av, bv = a.value, b.value

        def fn(g):
            if tracked[0]:
                _accum(a, _unbroadcast(g * bv, av.shape))
            if tracked[1]:
                _accum(b, _unbroadcast(g * av, bv.shape))

        return fn

    return _emit(value, (a, b), bwd)


def scale(a, c: float) -> Tensor:
    a = _wrap(a)
    c = float(c)

    def bwd(out):
        return lambda g: _accum(a, g * c)

    return _emit(a.value * c, (a,), bwd)


def shift(a, c: float) -> Tensor:
    a = _wrap(a)

    def bwd(out):
        return lambda g: _accum(a, g)

    return _emit(a.value + float(c), (a,), bwd)


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.value.ndim < 2 or b.value.ndim < 2:
        raise ValueError("matmul operands must have ndim >= 2")
    value = a.value @ b.value
    tracked = (_tracked(a), _tracked(b))

    def bwd(out):
        av, bv = a.value, b.value

        def fn(g):
            if tracked[0]:
                _accum(a, _unbroadcast(g @ bv.swapaxes(-1, -2), av.shape))
            if tracked[1]:
                _accum(b, _unbroadcast(av.swapaxes(-1, -2) @ g, bv.shape))

        return fn

    return _emit(value, (a, b), bwd)


def affine(x, w, b) -> Tensor:
    """``x @ w + b`` with a 2D weight and 1D bias, fused on one tape entry."""
    x, w, b = _wrap(x), _wrap(w), _wrap(b)
    if w.value.ndim != 2 or b.value.ndim != 1 or x.value.ndim < 2:
        raise ValueError(
            f"affine expects x ndim>=2, w 2D, b 1D; got {x.shape}, {w.shape}, {b.shape}"
        )
    if x.value.shape[-1] != w.value.shape[0] or w.value.shape[1] != b.value.shape[0]:
        raise ValueError(f"affine shape mismatch: {x.shape} @ {w.shape} + {b.shape}")
    value = x.value @ w.value + b.value
    tracked = (_tracked(x), _tracked(w), _tracked(b))

    def bwd(out):
        xv, wv = x.value, w.value

        def fn(g):
            if tracked[0]:
                _accum(x, g @ wv.T)
            if tracked[1]:
                xf = xv.reshape(-1, xv.shape[-1])
                gf = g.reshape(-1, g.shape[-1])
                _accum(w, xf.T @ gf)
            if tracked[2]:
                _accum(b, g.reshape(-1, g.shape[-1]).sum(axis=0))

        return fn

    return _emit(value, (x, w, b), bwd)


# ---------------------------------------------------------------------------
# elementwise nonlinearities


def sigmoid(x) -> Tensor:
    x = _wrap(x)
    value = expit(x.value)

    def bwd(out):
        y = out.value
        return lambda g: _accum(x, g * y * (1.0 - y))

    return _emit(value, (x,), bwd)


def tanh(x) -> Tensor:
    x = _wrap(x)
    value = np.tanh(x.value)

    def bwd(out):
        y = out.value
        return lambda g: _accum(x, g * (1.0 - y * y))

    return _emit(value, (x,), bwd)


def relu(x) -> Tensor:
    x = _wrap(x)
    value = np.maximum(x.value, 0.0)

    def bwd(out):
        mask = (x.value > 0.0).astype(np.float64)
        return lambda g: _accum(x, g * mask)

    return _emit(value, (x,), bwd)


def exp(x) -> Tensor:
    x = _wrap(x)
    value = np.exp(x.value)

    def bwd(out):
        y = out.value
        return lambda g: _accum(x, g * y)

    return _emit(value, (x,), bwd)


def log(x) -> Tensor:
    x = _wrap(x)
    value = np.log(x.value)

    def bwd(out):
        xv = x.value
        return lambda g: _accum(x, g / xv)

    return _emit(value, (x,), bwd)


# ---------------------------------------------------------------------------
# reductions and normalizations


def softmax(x, axis: int = -1) -> Tensor:
    """Max-stabilized softmax; large-negative mask entries map to exact zero."""
    x = _wrap(x)
    if x.value.shape[axis] == 0:
        raise ValueError("softmax over an empty axis")
    z = x.value - x.value.max(axis=axis, keepdims=True)
    e = np.exp(z)
    value = e / e.sum(axis=axis, keepdims=True)

    def bwd(out):
        y = out.value

        def fn(g):
            _accum(x, y * (g - (g * y).sum(axis=axis, keepdims=True)))

        return fn

    return _emit(value, (x,), bwd)


def log_softmax(x, axis: int = -1) -> Tensor:
    x = _wrap(x)
    if x.value.shape[axis] == 0:
        raise ValueError("log_softmax over an empty axis")
    z = x.value - x.value.max(axis=axis, keepdims=True)
    value = z - np.log(np.exp(z).sum(axis=axis, keepdims=True))

    def bwd(out):
        y = out.value

        def fn(g):
            _accum(x, g - np.exp(y) * g.sum(axis=axis, keepdims=True))

        return fn

    return _emit(value, (x,), bwd)


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then apply the
    trained elementwise gain and bias. ``eps`` floors the variance so constant
    inputs normalize to zero instead of dividing by zero."""
    x, gain, bias = _wrap(x), _wrap(gain), _wrap(bias)
    mu = x.value.mean(axis=-1, keepdims=True)
    xc = x.value - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    s = np.sqrt(var + eps)
    xhat = xc / s
    value = xhat * gain.value + bias.value
    tracked = (_tracked(x), _tracked(gain), _tracked(bias))

    def bwd(out):
        gv = gain.value

        def fn(g):
            if tracked[1]:
                _accum(gain, _unbroadcast(g * xhat, gain.value.shape))
            if tracked[2]:
                _accum(bias, _unbroadcast(g, bias.value.shape))
            if tracked[0]:
                dxhat = g * gv
                dx = (
                    dxhat
                    - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
                ) / s
                _accum(x, dx)

        return fn

    return _emit(value, (x, gain, bias), bwd)


def concat(parts, axis: int = -1) -> Tensor:
    parts = [_wrap(p) for p in parts]
    if not parts:
        raise ValueError("concat of an empty list")
    value = np.concatenate([p.value for p in parts], axis=axis)
    tracked = [_tracked(p) for p in parts]

    def bwd(out):
        sizes = [p.value.shape[axis] for p in parts]
        splits = np.cumsum(sizes)[:-1]

        def fn(g):
            for p, gpart, tr in zip(parts, np.split(g, splits, axis=axis), tracked):
                if tr:
                    _accum(p, gpart)

        return fn

    return _emit(value, tuple(parts), bwd)


def reshape(x, shape) -> Tensor:
    x = _wrap(x)
    value = x.value.reshape(shape)

    def bwd(out):
        orig = x.value.shape
        return lambda g: _accum(x, g.reshape(orig))

    return _emit(value, (x,), bwd)


def transpose(x, axes) -> Tensor:
    x = _wrap(x)
    value = x.value.transpose(axes)

    def bwd(out):
        inv = np.argsort(axes)
        return lambda g: _accum(x, g.transpose(inv))

    return _emit(value, (x,), bwd)


def select_index(x, idx) -> Tensor:
    """Pick one entry of the last axis per leading position:
    ``out[...] = x[..., idx[...]]``."""
    x = _wrap(x)
    idx = np.asarray(idx, dtype=np.intp)
    if idx.shape != x.value.shape[:-1]:
        raise ValueError(
            f"index shape {idx.shape} must match leading dims {x.value.shape[:-1]}"
        )
    value = np.take_along_axis(x.value, idx[..., None], axis=-1)[..., 0]

    def bwd(out):
        def fn(g):
            gx = np.zeros_like(x.value)
            np.put_along_axis(gx, idx[..., None], g[..., None], axis=-1)
            _accum(x, gx)

        return fn

    return _emit(value, (x,), bwd)


def asum(x, axis=None) -> Tensor:
    x = _wrap(x)
    value = x.value.sum(axis=axis)

    def bwd(out):
        shape = x.value.shape

        def fn(g):
            if axis is None:
                _accum(x, np.broadcast_to(g, shape).copy())
            else:
                _accum(x, np.broadcast_to(np.expand_dims(g, axis), shape).copy())

        return fn

    return _emit(value, (x,), bwd)
