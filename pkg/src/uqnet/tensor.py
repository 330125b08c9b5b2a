"""Reverse-mode automatic differentiation over numpy float64 arrays.

The engine is eager: each operation executes immediately and records an
operation node (parent tensors plus a gradient closure) on the result.
Calling :meth:`Tensor.backward` on a scalar output replays the recorded
graph once in reverse topological order, so every node is visited exactly
once and a value used k times accumulates the sum of its k path gradients.

Deliberate restrictions, chosen for the small models this library trains:

* float64 everywhere;
* broadcasting is limited to (scalar op tensor) and rank-1 bias addition
  along the last axis -- anything else raises :class:`ShapeError`;
* every operation checks its result for NaN/Inf and raises
  :class:`NonFiniteError` naming the offending op and node (toggleable via
  :func:`set_finite_checks`).
"""

from __future__ import annotations

import itertools
import threading
from contextlib import contextmanager

import numpy as np

__all__ = [
    "Tensor",
    "NonFiniteError",
    "ShapeError",
    "no_grad",
    "set_finite_checks",
    "finite_checks_enabled",
    "finite_checks",
    "conv2d",
    "global_avg_pool",
    "cross_entropy",
    "check_gradient",
]


class NonFiniteError(ArithmeticError):
    """An operation produced NaN or Inf while finite checks were enabled."""


class ShapeError(ValueError):
    """Operand shapes fall outside the supported broadcasting rules."""


_node_counter = itertools.count()

_tls = threading.local()

_FINITE_CHECKS = True


def _grad_enabled() -> bool:
    return getattr(_tls, "grad_enabled", True)


@contextmanager
def no_grad():
    """Disable graph recording in the current thread for the duration."""
    prev = _grad_enabled()
    _tls.grad_enabled = False
    try:
        yield
    finally:
        _tls.grad_enabled = prev


def set_finite_checks(enabled: bool) -> None:
    """Globally enable or disable NaN/Inf detection on op results."""
    global _FINITE_CHECKS
    _FINITE_CHECKS = bool(enabled)


def finite_checks_enabled() -> bool:
    return _FINITE_CHECKS


@contextmanager
def finite_checks(enabled: bool):
    prev = _FINITE_CHECKS
    set_finite_checks(enabled)
    try:
        yield
    finally:
        set_finite_checks(prev)


def _checked(data: np.ndarray, op: str, node_id: int) -> np.ndarray:
    if _FINITE_CHECKS and not np.all(np.isfinite(data)):
        raise NonFiniteError(f"op '{op}' produced non-finite values (node {node_id})")
    return data


class Tensor:
    """N-dimensional float64 array with optional gradient tracking.

    ``data`` is always a float64 ndarray; ``grad`` is None until a backward
    pass populates it, after which it has the same shape as ``data``.
    """

    __slots__ = ("data", "grad", "requires_grad", "node_id", "op", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.node_id = next(_node_counter)
        self.op = "leaf"
        self._parents = ()
        self._backward = None
        _checked(self.data, "leaf", self.node_id)

    # -- basic protocol ----------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __float__(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        grad = ", grad" if self.grad is not None else ""
        return f"Tensor(shape={self.data.shape}, op={self.op!r}{grad})"

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    # -- graph construction ------------------------------------------------

    def backward(self) -> None:
        """Populate ``grad`` on every tracked tensor this scalar depends on."""
        if self.data.size != 1:
            raise ValueError(f"backward() requires a scalar output, got shape {self.data.shape}")
        if not self.requires_grad:
            raise ValueError("output does not depend on any tensor with requires_grad=True")

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    t.grad = g if t.grad is None else t.grad + g


def _from_op(data: np.ndarray, parents: tuple, op: str, backward) -> Tensor:
    track = _grad_enabled() and any(p.requires_grad for p in parents)
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = track
    out.node_id = next(_node_counter)
    out.op = op
    out._parents = parents if track else ()
    out._backward = backward if track else None
    _checked(data, op, out.node_id)
    return out


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _is_scalar(a: np.ndarray) -> bool:
    return a.ndim == 0


def _sum_to_bias(g: np.ndarray) -> np.ndarray:
    # collapse everything but the last axis
    return g.reshape(-1, g.shape[-1]).sum(axis=0)


# -- arithmetic ops ---------------------------------------------------------


def _add(a: Tensor, b: Tensor) -> Tensor:
    A, B = a.data, b.data
    if A.shape == B.shape:
        def back(g):
            _accumulate(a, g)
            _accumulate(b, g)
    elif _is_scalar(B):
        def back(g):
            _accumulate(a, g)
            _accumulate(b, np.asarray(g.sum()))
    elif _is_scalar(A):
        def back(g):
            _accumulate(a, np.asarray(g.sum()))
            _accumulate(b, g)
    elif B.ndim == 1 and A.ndim >= 2 and A.shape[-1] == B.shape[0]:
        def back(g):
            _accumulate(a, g)
            _accumulate(b, _sum_to_bias(g))
    elif A.ndim == 1 and B.ndim >= 2 and B.shape[-1] == A.shape[0]:
        def back(g):
            _accumulate(a, _sum_to_bias(g))
            _accumulate(b, g)
    else:
        raise ShapeError(f"add: unsupported shapes {A.shape} + {B.shape}")
    return _from_op(A + B, (a, b), "add", back)


def _mul(a: Tensor, b: Tensor) -> Tensor:
    A, B = a.data, b.data
    if A.shape == B.shape:
        def back(g):
            _accumulate(a, g * B)
            _accumulate(b, g * A)
    elif _is_scalar(B):
        def back(g):
            _accumulate(a, g * B)
            _accumulate(b, np.asarray((g * A).sum()))
    elif _is_scalar(A):
        def back(g):
            _accumulate(a, np.asarray((g * B).sum()))
            _accumulate(b, g * A)
    else:
        raise ShapeError(f"mul: unsupported shapes {A.shape} * {B.shape}")
    return _from_op(A * B, (a, b), "mul", back)


def _matmul(a: Tensor, b: Tensor) -> Tensor:
    A, B = a.data, b.data
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ShapeError(f"matmul: expected 2-d operands with matching inner dim, got {A.shape} @ {B.shape}")

    def back(g):
        _accumulate(a, g @ B.T)
        _accumulate(b, A.T @ g)

    with np.errstate(over="ignore", invalid="ignore"):
        data = A @ B
    return _from_op(data, (a, b), "matmul", back)


def _ew_unary(x: Tensor, op: str, fwd, dfdx) -> Tensor:
    # non-finite results surface as NonFiniteError, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        data = fwd(x.data)

    def back(g):
        _accumulate(x, g * dfdx(x.data, data))

    return _from_op(data, (x,), op, back)


# attach operators to Tensor

def _t_add(self, other):
    return _add(self, _as_tensor(other))


def _t_radd(self, other):
    return _add(_as_tensor(other), self)


def _t_neg(self):
    return _ew_unary(self, "neg", lambda d: -d, lambda d, out: np.full_like(d, -1.0))


def _t_sub(self, other):
    return _add(self, _t_neg(_as_tensor(other)))


def _t_rsub(self, other):
    return _add(_as_tensor(other), _t_neg(self))


def _t_mul(self, other):
    return _mul(self, _as_tensor(other))


def _t_div(self, other):
    if isinstance(other, Tensor):
        if not _is_scalar(other.data):
            raise ShapeError("div: only division by a scalar is supported")
        inv = _ew_unary(other, "reciprocal", lambda d: 1.0 / d, lambda d, out: -1.0 / (d * d))
        return _mul(self, inv)
    return _mul(self, Tensor(1.0 / float(other)))


def relu(x: Tensor) -> Tensor:
    return _ew_unary(x, "relu", lambda d: np.maximum(d, 0.0), lambda d, out: (d > 0).astype(np.float64))


def exp(x: Tensor) -> Tensor:
    return _ew_unary(x, "exp", np.exp, lambda d, out: out)


def log(x: Tensor) -> Tensor:
    return _ew_unary(x, "log", np.log, lambda d, out: 1.0 / d)


def square(x: Tensor) -> Tensor:
    return _ew_unary(x, "square", np.square, lambda d, out: 2.0 * d)


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp values to [lo, hi]; gradient passes only through unclamped entries."""
    lo = float(lo)
    hi = float(hi)
    data = np.clip(x.data, lo, hi)

    def back(g):
        _accumulate(x, g * ((x.data >= lo) & (x.data <= hi)).astype(np.float64))

    return _from_op(data, (x,), "clip", back)


def tsum(x: Tensor) -> Tensor:
    data = np.asarray(x.data.sum())

    def back(g):
        _accumulate(x, np.broadcast_to(g, x.data.shape).copy())

    return _from_op(data, (x,), "sum", back)


def tmean(x: Tensor) -> Tensor:
    n = x.data.size
    data = np.asarray(x.data.mean())

    def back(g):
        _accumulate(x, np.broadcast_to(g / n, x.data.shape).copy())

    return _from_op(data, (x,), "mean", back)


def softmax(x: Tensor) -> Tensor:
    """Softmax along the last axis (numerically stable)."""
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        dot = (g * s).sum(axis=-1, keepdims=True)
        _accumulate(x, s * (g - dot))

    return _from_op(s, (x,), "softmax", back)


def reshape(x: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    data = x.data.reshape(shape)

    def back(g):
        _accumulate(x, g.reshape(x.data.shape))

    return _from_op(data, (x,), "reshape", back)


Tensor.__add__ = _t_add
Tensor.__radd__ = _t_radd
Tensor.__neg__ = _t_neg
Tensor.__sub__ = _t_sub
Tensor.__rsub__ = _t_rsub
Tensor.__mul__ = _t_mul
Tensor.__rmul__ = _t_mul
Tensor.__truediv__ = _t_div
Tensor.__matmul__ = lambda self, other: _matmul(self, _as_tensor(other))
Tensor.relu = relu
Tensor.exp = exp
Tensor.log = log
Tensor.square = square
Tensor.clip = clip
Tensor.sum = tsum
Tensor.mean = tmean
Tensor.softmax = softmax
Tensor.reshape = lambda self, *shape: reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)


# -- convolution and pooling -------------------------------------------------


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, padding: int | None = None) -> Tensor:
    """2-d convolution, stride 1.

    ``x`` is [N, Cin, H, W], ``weight`` [Cout, Cin, k, k] with odd k, and
    ``bias`` [Cout]. Default padding k//2 keeps the spatial size.
    """
    X, W, B = x.data, weight.data, bias.data
    if X.ndim != 4 or W.ndim != 4:
        raise ShapeError(f"conv2d: expected 4-d input/weight, got {X.shape} and {W.shape}")
    cout, cin, k, k2 = W.shape
    if k != k2 or k % 2 != 1:
        raise ShapeError(f"conv2d: kernel must be square with odd size, got {W.shape}")
    if X.shape[1] != cin:
        raise ShapeError(f"conv2d: input has {X.shape[1]} channels, weight expects {cin}")
    if B.shape != (cout,):
        raise ShapeError(f"conv2d: bias shape {B.shape} does not match {cout} output channels")
    p = k // 2 if padding is None else int(padding)

    n, _, h, w = X.shape
    xp = np.pad(X, ((0, 0), (0, 0), (p, p), (p, p))) if p > 0 else X
    ho = h + 2 * p - k + 1
    wo = w + 2 * p - k + 1
    windows = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    # [N, Cin, Ho, Wo, k, k] -> [N*Ho*Wo, Cin*k*k]
    patches = np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5)).reshape(n * ho * wo, cin * k * k)
    wmat = W.reshape(cout, cin * k * k)
    with np.errstate(over="ignore", invalid="ignore"):
        out = (patches @ wmat.T).reshape(n, ho, wo, cout).transpose(0, 3, 1, 2) + B[None, :, None, None]

    def back(g):
        gmat = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(n * ho * wo, cout)
        _accumulate(bias, g.sum(axis=(0, 2, 3)))
        _accumulate(weight, (gmat.T @ patches).reshape(cout, cin, k, k))
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for dy in range(k):
                for dx in range(k):
                    # [N,Cout,Ho,Wo] x [Cout,Cin] -> [N,Ho,Wo,Cin]
                    contrib = np.tensordot(g, W[:, :, dy, dx], axes=([1], [0]))
                    gxp[:, :, dy:dy + ho, dx:dx + wo] += contrib.transpose(0, 3, 1, 2)
            _accumulate(x, gxp[:, :, p:p + h, p:p + w] if p > 0 else gxp)

    return _from_op(np.ascontiguousarray(out), (x, weight, bias), "conv2d", back)


def global_avg_pool(x: Tensor) -> Tensor:
    """Mean over the spatial axes: [N, C, H, W] -> [N, C]."""
    X = x.data
    if X.ndim != 4:
        raise ShapeError(f"global_avg_pool: expected 4-d input, got {X.shape}")
    n_spatial = X.shape[2] * X.shape[3]

    def back(g):
        _accumulate(x, np.broadcast_to(g[:, :, None, None] / n_spatial, X.shape).copy())

    return _from_op(X.mean(axis=(2, 3)), (x,), "global_avg_pool", back)


# -- classification loss primitive -------------------------------------------


def cross_entropy(logits: Tensor, targets) -> Tensor:
    """Mean cross-entropy of softmax(logits) against integer targets.

    ``logits`` is [batch, C]; ``targets`` an integer array of shape [batch]
    with values in [0, C). Computed via log-sum-exp; the gradient is
    (softmax - onehot) / batch.
    """
    logits = _as_tensor(logits)
    L = logits.data
    if L.ndim != 2:
        raise ShapeError(f"cross_entropy: logits must be [batch, C], got {L.shape}")
    t = np.asarray(targets)
    if t.ndim != 1 or t.shape[0] != L.shape[0]:
        raise ShapeError(f"cross_entropy: targets shape {t.shape} does not match batch {L.shape[0]}")
    if not np.issubdtype(t.dtype, np.integer):
        raise TypeError("cross_entropy: targets must be integers")
    n, c = L.shape
    if t.min() < 0 or t.max() >= c:
        raise ValueError(f"cross_entropy: target out of range [0, {c})")

    m = L.max(axis=1, keepdims=True)
    z = L - m
    e = np.exp(z)
    denom = e.sum(axis=1, keepdims=True)
    logp = z - np.log(denom)
    probs = e / denom
    data = np.asarray(-logp[np.arange(n), t].mean())

    def back(g):
        gx = probs.copy()
        gx[np.arange(n), t] -= 1.0
        _accumulate(logits, float(g) * gx / n)

    return _from_op(data, (logits,), "cross_entropy", back)


# -- gradient verification ----------------------------------------------------


def check_gradient(f, point, step: float = 1e-5) -> float:
    """Compare the analytic gradient of scalar ``f`` against central differences.

    Returns the max over coordinates of |analytic - numeric| / max(1, |analytic|).
    ``f`` must be deterministic (freeze any RNG it uses); this is probed by
    evaluating it twice.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    base = np.array(point.data if isinstance(point, Tensor) else point, dtype=np.float64)

    def value(arr) -> float:
        with no_grad():
            out = f(Tensor(arr))
        if not isinstance(out, Tensor) or out.data.size != 1:
            raise ValueError("f must return a scalar Tensor")
        return float(out.data)

    if value(base.copy()) != value(base.copy()):
        raise ValueError("f is not deterministic under a fixed seed")

    x = Tensor(base.copy(), requires_grad=True)
    out = f(x)
    if not isinstance(out, Tensor) or out.data.size != 1:
        raise ValueError("f must return a scalar Tensor")
    out.backward()
    analytic = np.zeros_like(base) if x.grad is None else x.grad
    analytic = analytic.reshape(-1)

    numeric = np.empty(base.size)
    flat = base.reshape(-1)
    for i in range(base.size):
        orig = flat[i]
        flat[i] = orig + step
        f_plus = value(base.copy())
        flat[i] = orig - step
        f_minus = value(base.copy())
        flat[i] = orig
        numeric[i] = (f_plus - f_minus) / (2.0 * step)

    rel = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(rel.max())
