"""Tour of the autodiff engine: eager ops, backward pass, gradient checking.

Run: python demos/01_autodiff_and_gradients.py
"""

import numpy as np

from uqnet import Tensor, check_gradient, cross_entropy

print("== scalars and the recorded graph ==")
x = Tensor(3.0, requires_grad=True)
y = x.square()
y.backward()
print(f"y = x^2 at x=3:  y = {float(y)},  dy/dx = {float(x.grad)}")

print("\n== fan-out accumulates gradients additively ==")
a = Tensor([1.5, -2.0], requires_grad=True)
(a + a).sum().backward()
print(f"d(a+a)/da = {a.grad}  (same as d(2a)/da)")

print("\n== a small classifier loss, end to end ==")
rng = np.random.default_rng(0)
feats = Tensor(rng.normal(size=(4, 3)))
w = Tensor(rng.normal(size=(3, 4)) * 0.5, requires_grad=True)
b = Tensor(np.zeros(4), requires_grad=True)
targets = np.array([0, 1, 2, 3])
loss = cross_entropy(feats @ w + b, targets)
loss.backward()
print(f"cross-entropy = {float(loss):.4f}")
print(f"gradient shapes: w {w.grad.shape}, b {b.grad.shape}")

print("\n== analytic gradients vs central finite differences ==")
for name, fn, point in [
    ("x^2 at 3", lambda t: t.square(), np.array(3.0)),
    ("softmax+weights", lambda t: (t.softmax() * Tensor([0.3, -1.0, 2.0, 0.1])).sum(),
     rng.normal(size=4)),
    ("linear + CE", lambda t: cross_entropy(feats @ t + b, targets), w.data.copy()),
]:
    err = check_gradient(fn, point, step=1e-5)
    print(f"{name:18s} max relative error = {err:.2e}")
