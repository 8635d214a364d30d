"""Minimal reverse-mode automatic differentiation on numpy arrays.

Just enough machinery for the models in this package: elementwise
arithmetic with broadcasting, matrix products, a strided 2-D convolution
with externally injected weights, dense layers, the usual activations, a
stabilized softmax cross-entropy, and Adam.

Every operation builds a fresh graph node; calling ``backward`` on a
scalar loss walks the graph once in reverse topological order and
accumulates gradients into ``Tensor.grad``.  Forward passes are pure
functions of the tensor values.
"""

from __future__ import annotations

import struct

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """Array node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._vjp = None  # maps output grad -> tuple of parent grads

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- operator sugar -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(other, -1.0) if isinstance(other, Tensor) else -np.asarray(other))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __matmul__(self, other):
        return matmul(self, other)

    def item(self) -> float:
        return float(self.data)

    def backward(self):
        backward(self)


def _node(data: np.ndarray, parents: tuple[Tensor, ...], vjp) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad or p._parents for p in parents):
        out._parents = parents
        out._vjp = vjp
    return out


def _coerce(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def backward(loss: Tensor):
    """Accumulate d(loss)/d(node) into ``grad`` for every reachable node."""
    if loss.data.size != 1:
        raise ValueError("backward needs a scalar loss")
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
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
            stack.append((parent, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._vjp is None or node.grad is None:
            continue
        for parent, pgrad in zip(node._parents, node._vjp(node.grad)):
            if pgrad is None:
                continue
            if parent.grad is None:
                parent.grad = np.zeros_like(parent.data)
            parent.grad += pgrad


# -- primitive operations -----------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    return _node(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    return _node(
        a.data * b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        ),
    )


def matmul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    if a.data.ndim == 1 and b.data.ndim == 2:
        return _node(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, np.outer(a.data, g)))
    if a.data.ndim == 2 and b.data.ndim == 2:
        return _node(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))
    raise ValueError("matmul supports 1-D @ 2-D and 2-D @ 2-D")


def reshape(a: Tensor, shape) -> Tensor:
    old = a.data.shape
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def summation(a: Tensor, axis=None) -> Tensor:
    shape = a.data.shape

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return _node(a.data.sum(axis=axis), (a,), vjp)


def mean(a: Tensor, axis=None) -> Tensor:
    count = a.data.size if axis is None else a.data.shape[axis]
    return mul(summation(a, axis=axis), 1.0 / count)


def log(a: Tensor) -> Tensor:
    return _node(np.log(a.data), (a,), lambda g: (g / a.data,))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _node(out, (a,), lambda g: (g * out,))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _node(out, (a,), lambda g: (g * (1.0 - out**2),))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _node(a.data * mask, (a,), lambda g: (g * mask,))


def leaky_relu(a: Tensor, slope: float = 0.01) -> Tensor:
    factor = np.where(a.data > 0, 1.0, slope)
    return _node(a.data * factor, (a,), lambda g: (g * factor,))


def sigmoid(a: Tensor, clamp_eps: float = 0.0) -> Tensor:
    """Logistic function; with ``clamp_eps`` the output is clipped into
    (clamp_eps, 1 - clamp_eps) and the gradient is zero where clipped."""
    x = a.data
    raw = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    if clamp_eps > 0:
        out = np.clip(raw, clamp_eps, 1.0 - clamp_eps)
        mask = (raw > clamp_eps) & (raw < 1.0 - clamp_eps)
    else:
        out, mask = raw, True
    return _node(out, (a,), lambda g: (g * raw * (1.0 - raw) * mask,))


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    mask = (a.data > lo) & (a.data < hi)
    return _node(np.clip(a.data, lo, hi), (a,), lambda g: (g * mask,))


def dense(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """Affine map ``x @ W.T + b`` for x of shape (n,) or (B, n), W (m, n)."""
    xd, wd, bd = x.data, weights.data, bias.data
    if wd.ndim != 2 or bd.shape != (wd.shape[0],):
        raise ValueError("weights must be (m, n) with bias (m,)")
    if xd.shape[-1] != wd.shape[1] or xd.ndim not in (1, 2):
        raise ValueError(f"input shape {xd.shape} does not match weights {wd.shape}")
    out = xd @ wd.T + bd

    def vjp(g):
        if xd.ndim == 1:
            return g @ wd, np.outer(g, xd), g
        return g @ wd, g.T @ xd, g.sum(axis=0)

    return _node(out, (x, weights, bias), vjp)


def conv2d(images: Tensor, kernels: Tensor, stride: int = 2) -> Tensor:
    """Valid cross-correlation with F kernels, no padding, no bias.

    ``images`` is (H, W) or (B, H, W); ``kernels`` is (F, kh, kw).  The
    output is (F, H', W') or (B, F, H', W') with H' = (H - kh)//stride + 1.
    """
    single = images.data.ndim == 2
    x = images.data[None] if single else images.data
    k = kernels.data
    if x.ndim != 3 or k.ndim != 3:
        raise ValueError("conv2d expects (B, H, W) images and (F, kh, kw) kernels")
    kh, kw = k.shape[1], k.shape[2]
    if x.shape[1] < kh or x.shape[2] < kw:
        raise ValueError("image smaller than kernel")
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    windows = windows[:, ::stride, ::stride]  # (B, H', W', kh, kw)
    out = np.einsum("bxykl,fkl->bfxy", windows, k)
    hp, wp = out.shape[2], out.shape[3]

    def vjp(g):
        g = g[None] if single else g
        dk = np.einsum("bxykl,bfxy->fkl", windows, g)
        dx = np.zeros_like(x)
        for di in range(kh):
            for dj in range(kw):
                view = dx[:, di : di + stride * hp : stride, dj : dj + stride * wp : stride]
                view += np.einsum("bfxy,f->bxy", g, k[:, di, dj])
        return (dx[0] if single else dx), dk

    return _node(out[0] if single else out, (images, kernels), vjp)


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Negative log softmax probability of the true class.

    For (C,) logits and an int label the result is a scalar; for (B, C)
    logits and (B,) labels it is the per-example loss vector.  Stabilized
    by max subtraction.
    """
    x = logits.data
    single = x.ndim == 1
    x2 = x[None] if single else x
    y = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if y.shape != (x2.shape[0],):
        raise ValueError("labels must match the batch dimension")
    if np.any(y < 0) or np.any(y >= x2.shape[1]):
        raise ValueError("label out of range")
    shifted = x2 - x2.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    losses = lse - shifted[np.arange(len(y)), y]
    probs = np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)

    def vjp(g):
        g2 = np.atleast_1d(g)
        onehot = np.zeros_like(x2)
        onehot[np.arange(len(y)), y] = 1.0
        dx = (probs - onehot) * g2[:, None]
        return (dx[0] if single else dx,)

    return _node(losses[0] if single else losses, (logits,), vjp)


def softmax_np(logits: np.ndarray) -> np.ndarray:
    """Plain softmax over the last axis (no graph); sums to 1 per row."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


# -- optimizer -----------------------------------------------------------------


class Adam:
    """Standard Adam with bias correction over a list of parameter tensors."""

    def __init__(self, params: list[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        """One update from the gradients currently stored on the params."""
        self.step_count += 1
        t = self.step_count
        for i, p in enumerate(self.params):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g**2
            m_hat = self.m[i] / (1 - self.beta1**t)
            v_hat = self.v[i] / (1 - self.beta2**t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {"step": np.array([float(self.step_count)])}
        for i in range(len(self.params)):
            out[f"m{i}"], out[f"v{i}"] = self.m[i], self.v[i]
        return out


# -- checkpoint container ------------------------------------------------------

CHECKPOINT_MAGIC = b"QBNNCKPT"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, tensors: dict[str, np.ndarray]):
    """Write named float64 arrays: magic, version, then one block per array
    (name length u32, utf-8 name, rank u32, dims u32 each, f64 LE values)."""
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(arr, dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path) -> dict[str, np.ndarray]:
    """Read a container written by ``save_checkpoint``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != CHECKPOINT_MAGIC:
        raise ValueError("bad checkpoint magic")
    (version,) = struct.unpack_from("<I", blob, 8)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    pos, out = 12, {}
    try:
        while pos < len(blob):
            (name_len,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            name = blob[pos : pos + name_len].decode("utf-8")
            if len(name.encode("utf-8")) != name_len:
                raise struct.error("short name")
            pos += name_len
            (rank,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            dims = struct.unpack_from(f"<{rank}I", blob, pos)
            pos += 4 * rank
            count = int(np.prod(dims)) if rank else 1
            end = pos + 8 * count
            if end > len(blob):
                raise struct.error("short data")
            out[name] = np.frombuffer(blob[pos:end], dtype="<f8").reshape(dims).copy()
            pos = end
    except struct.error as err:
        raise ValueError("truncated checkpoint") from err
    return out
