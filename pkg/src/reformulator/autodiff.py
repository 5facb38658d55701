"""Reverse-mode automatic differentiation over dense float64 arrays.

A small computation-graph engine: every operation returns a new Tensor node
holding the forward value plus a closure that routes the incoming gradient to
the node's parents. backward() walks the graph once in reverse topological
order. Gradients accumulate additively; the training loop is responsible for
zeroing Parameter gradients between steps.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor", "Parameter", "backward", "grad_check",
    "affine", "sigmoid", "tanh", "log", "exp",
    "add", "sub", "mul", "neg", "scale", "scale_by",
    "sum_all", "dot", "pick", "slice1d", "concat",
    "stack_rows", "stack_scalars", "max_over_rows",
    "softmax", "log_softmax", "cosine", "embedding_lookup",
]


class Tensor:
    """A node in the computation graph: float64 data plus a gradient slot."""

    __slots__ = ("data", "grad", "_parents", "_bw")

    def __init__(self, data):
        arr = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor holds non-finite values")
        self.data = arr
        self.grad = None
        self._parents = ()
        self._bw = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        if self.data.ndim != 0:
            raise ValueError("item() needs a scalar tensor, got shape %r" % (self.shape,))
        return float(self.data)

    def __repr__(self):
        return "Tensor(shape=%r)" % (self.shape,)


class Parameter(Tensor):
    """Trainable leaf tensor with a persistent, explicitly zeroed gradient."""

    __slots__ = ("name",)

    def __init__(self, data, name: str):
        super().__init__(data)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad.fill(0.0)

    def __repr__(self):
        return "Parameter(%s, shape=%r)" % (self.name, self.shape)


def _node(data, parents, bw):
    # internal fast path: skips the finite check on every intermediate
    t = object.__new__(Tensor)
    t.data = data
    t.grad = None
    t._parents = parents
    t._bw = bw
    return t


def _acc(t, g):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


# ---------------------------------------------------------------------------
# primitives


def affine(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """W @ x + b for a 1-D x. Gradient: gx = W^T g, gW = g x^T, gb = g."""
    if W.data.ndim != 2 or x.data.ndim != 1:
        raise ValueError("affine expects a matrix W and a vector x")
    m, n = W.data.shape
    if x.data.shape[0] != n or b.data.shape != (m,):
        raise ValueError(
            "affine dimension mismatch: W %r, x %r, b %r"
            % (W.data.shape, x.data.shape, b.data.shape))
    out = _node(W.data @ x.data + b.data, (x, W, b), None)

    def bw(g):
        _acc(x, W.data.T @ g)
        _acc(W, np.outer(g, x.data))
        _acc(b, g)
    out._bw = bw
    return out


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    y = np.empty_like(d)
    pos = d >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    ez = np.exp(d[~pos])
    y[~pos] = ez / (1.0 + ez)
    out = _node(y, (x,), None)

    def bw(g):
        _acc(x, g * y * (1.0 - y))
    out._bw = bw
    return out


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    out = _node(y, (x,), None)

    def bw(g):
        _acc(x, g * (1.0 - y * y))
    out._bw = bw
    return out


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0.0):
        raise ValueError("log needs strictly positive input")
    out = _node(np.log(x.data), (x,), None)

    def bw(g):
        _acc(x, g / x.data)
    out._bw = bw
    return out


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    out = _node(y, (x,), None)

    def bw(g):
        _acc(x, g * y)
    out._bw = bw
    return out


def _same_shape(a, b, op):
    if a.data.shape != b.data.shape:
        raise ValueError("%s shape mismatch: %r vs %r" % (op, a.data.shape, b.data.shape))


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    out = _node(a.data + b.data, (a, b), None)

    def bw(g):
        _acc(a, g)
        _acc(b, g)
    out._bw = bw
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "sub")
    out = _node(a.data - b.data, (a, b), None)

    def bw(g):
        _acc(a, g)
        _acc(b, -g)
    out._bw = bw
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product."""
    _same_shape(a, b, "mul")
    out = _node(a.data * b.data, (a, b), None)

    def bw(g):
        _acc(a, g * b.data)
        _acc(b, g * a.data)
    out._bw = bw
    return out


def scale(x: Tensor, c: float) -> Tensor:
    """Multiply by a plain python constant (not a graph node)."""
    c = float(c)
    out = _node(x.data * c, (x,), None)

    def bw(g):
        _acc(x, g * c)
    out._bw = bw
    return out


def neg(x: Tensor) -> Tensor:
    return scale(x, -1.0)


def scale_by(x: Tensor, s: Tensor) -> Tensor:
    """Multiply tensor x by a scalar graph node s."""
    if s.data.ndim != 0:
        raise ValueError("scale_by needs a scalar multiplier")
    out = _node(x.data * s.data, (x, s), None)

    def bw(g):
        _acc(x, g * s.data)
        _acc(s, np.sum(x.data * g))
    out._bw = bw
    return out


def sum_all(x: Tensor) -> Tensor:
    out = _node(np.asarray(np.sum(x.data)), (x,), None)

    def bw(g):
        _acc(x, np.full_like(x.data, float(g)))
    out._bw = bw
    return out


def dot(u: Tensor, v: Tensor) -> Tensor:
    if u.data.ndim != 1 or v.data.ndim != 1 or u.data.shape != v.data.shape:
        raise ValueError("dot needs two equal-length vectors")
    out = _node(np.asarray(u.data @ v.data), (u, v), None)

    def bw(g):
        _acc(u, g * v.data)
        _acc(v, g * u.data)
    out._bw = bw
    return out


def pick(x: Tensor, i: int) -> Tensor:
    """Select one element of a vector as a scalar node."""
    if x.data.ndim != 1:
        raise ValueError("pick needs a vector")
    i = int(i)
    if not 0 <= i < x.data.shape[0]:
        raise IndexError("pick index %d out of range %d" % (i, x.data.shape[0]))
    out = _node(np.asarray(x.data[i]), (x,), None)

    def bw(g):
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        x.grad[i] += g
    out._bw = bw
    return out


def slice1d(x: Tensor, start: int, stop: int) -> Tensor:
    if x.data.ndim != 1:
        raise ValueError("slice1d needs a vector")
    if not (0 <= start < stop <= x.data.shape[0]):
        raise ValueError("bad slice [%d:%d] for length %d" % (start, stop, x.data.shape[0]))
    out = _node(x.data[start:stop], (x,), None)

    def bw(g):
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        x.grad[start:stop] += g
    out._bw = bw
    return out


def concat(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 1 or b.data.ndim != 1:
        raise ValueError("concat needs two vectors")
    if a.data.shape[0] == 0 or b.data.shape[0] == 0:
        raise ValueError("concat of an empty vector")
    na = a.data.shape[0]
    out = _node(np.concatenate([a.data, b.data]), (a, b), None)

    def bw(g):
        _acc(a, g[:na])
        _acc(b, g[na:])
    out._bw = bw
    return out


def stack_rows(rows) -> Tensor:
    """Stack 1-D tensors of equal length into a (T, d) matrix."""
    rows = tuple(rows)
    if not rows:
        raise ValueError("stack_rows of nothing")
    d = rows[0].data.shape
    for r in rows:
        if r.data.ndim != 1 or r.data.shape != d:
            raise ValueError("stack_rows needs equal-length vectors")
    out = _node(np.stack([r.data for r in rows]), rows, None)

    def bw(g):
        for i, r in enumerate(rows):
            _acc(r, g[i])
    out._bw = bw
    return out


def stack_scalars(xs) -> Tensor:
    """Stack scalar nodes into a vector."""
    xs = tuple(xs)
    if not xs:
        raise ValueError("stack_scalars of nothing")
    for s in xs:
        if s.data.ndim != 0:
            raise ValueError("stack_scalars needs scalar nodes")
    out = _node(np.array([s.data for s in xs]), xs, None)

    def bw(g):
        for i, s in enumerate(xs):
            _acc(s, g[i])
    out._bw = bw
    return out


def max_over_rows(H: Tensor) -> Tensor:
    """Per-column maximum of a (T, d) matrix.

    The subgradient routes each column's gradient to the lowest row index
    attaining the maximum (argmax takes the first hit).
    """
    if H.data.ndim != 2 or H.data.shape[0] < 1:
        raise ValueError("max_over_rows needs a non-empty matrix")
    idx = np.argmax(H.data, axis=0)
    cols = np.arange(H.data.shape[1])
    out = _node(H.data[idx, cols], (H,), None)

    def bw(g):
        if H.grad is None:
            H.grad = np.zeros_like(H.data)
        H.grad[idx, cols] += g
    out._bw = bw
    return out


def softmax(x: Tensor) -> Tensor:
    """Stable softmax of a vector (max subtraction before exponentiation)."""
    if x.data.ndim != 1 or x.data.shape[0] == 0:
        raise ValueError("softmax needs a non-empty vector")
    z = x.data - np.max(x.data)
    e = np.exp(z)
    y = e / np.sum(e)
    out = _node(y, (x,), None)

    def bw(g):
        _acc(x, (g - np.dot(g, y)) * y)
    out._bw = bw
    return out


def log_softmax(x: Tensor) -> Tensor:
    """log(softmax(x)) computed stably; safe even when softmax underflows."""
    if x.data.ndim != 1 or x.data.shape[0] == 0:
        raise ValueError("log_softmax needs a non-empty vector")
    z = x.data - np.max(x.data)
    y = z - np.log(np.sum(np.exp(z)))
    out = _node(y, (x,), None)

    def bw(g):
        _acc(x, g - np.exp(y) * np.sum(g))
    out._bw = bw
    return out


def cosine(u: Tensor, v: Tensor) -> Tensor:
    """Cosine similarity of two vectors.

    If either vector has zero norm the result is the constant 0 with zero
    gradient (keeps padding-only inputs inert).
    """
    if u.data.ndim != 1 or v.data.ndim != 1 or u.data.shape != v.data.shape:
        raise ValueError("cosine needs two equal-length vectors")
    nu = float(np.linalg.norm(u.data))
    nv = float(np.linalg.norm(v.data))
    if nu == 0.0 or nv == 0.0:
        return _node(np.asarray(0.0), (), None)
    c = float(u.data @ v.data) / (nu * nv)
    out = _node(np.asarray(c), (u, v), None)

    def bw(g):
        _acc(u, g * (v.data / (nu * nv) - c * u.data / (nu * nu)))
        _acc(v, g * (u.data / (nu * nv) - c * v.data / (nv * nv)))
    out._bw = bw
    return out


def embedding_lookup(E: Tensor, idx: int) -> Tensor:
    """Row idx of an embedding matrix; gradient accumulates into that row only."""
    if E.data.ndim != 2:
        raise ValueError("embedding_lookup needs a matrix")
    idx = int(idx)
    if not 0 <= idx < E.data.shape[0]:
        raise IndexError("embedding row %d out of range %d" % (idx, E.data.shape[0]))
    out = _node(E.data[idx], (E,), None)

    def bw(g):
        if E.grad is None:
            E.grad = np.zeros_like(E.data)
        E.grad[idx] += g
    out._bw = bw
    return out


# ---------------------------------------------------------------------------
# backward + gradient checking


def _topo(root):
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor):
    """Run reverse-mode accumulation from a scalar loss.

    Parameter gradients are added to (never overwritten); intermediate node
    gradients are reset first, so calling backward on a freshly built graph is
    self-contained.
    """
    if loss.data.ndim != 0:
        raise ValueError("backward needs a scalar loss, got shape %r" % (loss.shape,))
    if not np.isfinite(loss.data):
        raise ValueError("backward on a non-finite loss")
    order = _topo(loss)
    pos = {id(n): i for i, n in enumerate(order)}
    for n in order:
        for p in n._parents:
            # cycles are impossible by construction; cheap sanity assert
            assert pos[id(p)] < pos[id(n)], "cycle in computation graph"
        if not isinstance(n, Parameter):
            n.grad = None
    loss.grad = np.asarray(1.0)
    for n in reversed(order):
        if n._bw is not None and n.grad is not None:
            n._bw(n.grad)


def grad_check(loss_fn, params, eps: float = 1e-5, n_coords: int = 200, seed: int = 0) -> float:
    """Compare backward() gradients against central finite differences.

    loss_fn rebuilds the graph from the current parameter values and returns a
    scalar Tensor; it must be deterministic. Checks a random subsample of up to
    n_coords coordinates across all parameters and returns the maximum relative
    error |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    loss = loss_fn()
    backward(loss)
    analytic = [p.grad.copy() for p in params]

    coords = [(k, i) for k, p in enumerate(params) for i in range(p.data.size)]
    rng = np.random.default_rng(seed)
    if len(coords) > n_coords:
        chosen = rng.choice(len(coords), size=n_coords, replace=False)
        coords = [coords[int(c)] for c in chosen]

    worst = 0.0
    for k, i in coords:
        p = params[k]
        orig = p.data.flat[i]
        p.data.flat[i] = orig + eps
        f_plus = loss_fn().item()
        p.data.flat[i] = orig - eps
        f_minus = loss_fn().item()
        p.data.flat[i] = orig
        numeric = (f_plus - f_minus) / (2.0 * eps)
        a = analytic[k].flat[i]
        rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        if rel > worst:
            worst = rel
    return worst
