"""The recorded-forward / reverse-sweep differentiation engine.

Records a toy computation on a tape, checks one gradient against central
finite differences, and runs Adam on a quadratic bowl to show the
bias-corrected step sizes.
"""

import numpy as np

from rydberg_vmc.autodiff import (
    Tensor,
    asum,
    backward,
    constant,
    matmul,
    mul,
    record,
    tanh,
    zero_grad,
)
from rydberg_vmc.optim import AdamState, adam_update

rng = np.random.default_rng(0)

w = Tensor(rng.normal(size=(3, 3)) * 0.5, requires_grad=True)
x = constant(rng.normal(size=(3, 1)))

def loss_value():
    return float(asum(tanh(matmul(w, x))).value)

zero_grad([w])
with record():
    loss = asum(tanh(matmul(w, x)))
    backward(loss)

h = 1e-6
k = (1, 2)
old = w.value[k]
w.value[k] = old + h
fp = loss_value()
w.value[k] = old - h
fm = loss_value()
w.value[k] = old
fd = (fp - fm) / (2 * h)
print(f"loss = {loss.value:.6f}")
print(f"dloss/dW[1,2]: backward = {w.grad_array()[k]:+.8f}, finite diff = {fd:+.8f}\n")

# Adam on f(p) = |p|^2 / 2: gradient p, minimum at 0. The first update has
# magnitude ~lr in every coordinate thanks to bias correction.
p = {"p": Tensor(np.array([2.0, -1.0, 0.5]), requires_grad=True)}
state = AdamState(p)
print("Adam on a quadratic (lr = 0.1):")
for step in range(1, 6):
    grad = {"p": p["p"].value.copy()}
    adam_update(p, grad, state, lr=0.1)
    print(f"  step {step}: p = {np.array2string(p['p'].value, precision=4)}")
