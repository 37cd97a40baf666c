"""Reverse-mode automatic differentiation over numpy float64 arrays.

A `Tape` records every operation executed while it is active; `backward`
replays the record in reverse, accumulating gradients into every tensor
that requires them. The op set is exactly what the classifier and the
generator need: matrix products, a small elementwise family, softmax,
embedding gathers, cross-entropy, and Gumbel-Softmax sampling.

Gradients are checked against central finite differences by `grad_check`;
everything is float64 so those checks are tight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ShapeError, VocabularyError

PROB_FLOOR = 1e-12  # cross-entropy clamp: -log never sees 0
GUMBEL_CLAMP = 1e-10  # uniform samples stay inside (0, 1)


class Tensor:
    """N-dimensional float64 array, optionally tracked for gradients."""

    __slots__ = ("data", "requires_grad", "grad", "_node")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._node: "_Node" | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


class _Node:
    __slots__ = ("out", "parents", "backfn", "needs", "tape")

    def __init__(self, out, parents, backfn, needs, tape):
        self.out = out
        self.parents = parents
        self.backfn = backfn
        self.needs = needs
        self.tape = tape


class Tape:
    """Ordered record of executed ops; execution order is a topological order."""

    def __init__(self):
        self.nodes: list[_Node] = []
        self.consumed = False
        self._prev: Tape | None = None

    def __enter__(self) -> "Tape":
        global _ACTIVE
        self._prev = _ACTIVE
        _ACTIVE = self
        return self

    def __exit__(self, *exc) -> None:
        global _ACTIVE
        _ACTIVE = self._prev
        self._prev = None


_ACTIVE: Tape | None = None


def _tracked(t: Tensor, tape: Tape) -> bool:
    return t.requires_grad or (t._node is not None and t._node.tape is tape)


def _emit(data: np.ndarray, parents: tuple[Tensor, ...], backfn) -> Tensor:
    out = Tensor(data)
    tape = _ACTIVE
    if tape is None:
        return out
    needs = tuple(_tracked(p, tape) for p in parents)
    if not any(needs):
        return out
    out.requires_grad = True
    node = _Node(out, parents, backfn, needs, tape)
    out._node = node
    tape.nodes.append(node)
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad += g


def backward(loss: Tensor) -> None:
    """Populate .grad on every tracked tensor reachable from a scalar loss."""
    if loss.data.shape != ():
        raise ShapeError(f"backward requires a scalar loss, got shape {loss.data.shape}")
    node = loss._node
    if node is None:
        raise ValueError("loss is not recorded on any tape (no tracked inputs?)")
    tape = node.tape
    if tape.consumed:
        raise RuntimeError("tape already consumed by a previous backward call")
    tape.consumed = True
    loss.grad = np.ones((), dtype=np.float64)
    for node in reversed(tape.nodes):
        g = node.out.grad
        if g is None:
            continue
        grads = node.backfn(g, node.needs)
        for parent, need, pg in zip(node.parents, node.needs, grads):
            if need and pg is not None:
                _accumulate(parent, pg)


# ---------------------------------------------------------------------------
# ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul shapes incompatible: {a.data.shape} x {b.data.shape}")

    def backfn(g, needs):
        da = g @ b.data.T if needs[0] else None
        db = a.data.T @ g if needs[1] else None
        return da, db

    return _emit(a.data @ b.data, (a, b), backfn)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"add shapes differ: {a.data.shape} vs {b.data.shape}")

    def backfn(g, needs):
        return g, g

    return _emit(a.data + b.data, (a, b), backfn)


def add_bias(mat: Tensor, bias: Tensor) -> Tensor:
    """Add a 1-D bias to every row of a 2-D matrix."""
    if mat.data.ndim != 2 or bias.data.ndim != 1 or mat.data.shape[1] != bias.data.shape[0]:
        raise ShapeError(f"add_bias shapes incompatible: {mat.data.shape} + {bias.data.shape}")

    def backfn(g, needs):
        return g, g.sum(axis=0) if needs[1] else None

    return _emit(mat.data + bias.data, (mat, bias), backfn)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"mul shapes differ: {a.data.shape} vs {b.data.shape}")

    def backfn(g, needs):
        da = g * b.data if needs[0] else None
        db = g * a.data if needs[1] else None
        return da, db

    return _emit(a.data * b.data, (a, b), backfn)


def scale(x: Tensor, c: float) -> Tensor:
    c = float(c)

    def backfn(g, needs):
        return (g * c,)

    return _emit(x.data * c, (x,), backfn)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise ShapeError("concat of an empty tensor list")
    nd = tensors[0].data.ndim
    ax = axis if axis >= 0 else nd + axis
    sizes = [t.data.shape[ax] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backfn(g, needs):
        slicer = [slice(None)] * nd
        out = []
        for i in range(len(tensors)):
            if needs[i]:
                slicer[ax] = slice(offsets[i], offsets[i + 1])
                out.append(g[tuple(slicer)])
            else:
                out.append(None)
        return out

    return _emit(np.concatenate([t.data for t in tensors], axis=ax), tuple(tensors), backfn)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeError(f"slice_cols expects a matrix, got shape {x.data.shape}")

    def backfn(g, needs):
        dx = np.zeros_like(x.data)
        dx[:, start:stop] = g
        return (dx,)

    return _emit(x.data[:, start:stop].copy(), (x,), backfn)


def take_rows(x: Tensor, ids) -> Tensor:
    """Gather rows of a matrix; backward scatter-adds into the source."""
    idx = np.asarray(ids, dtype=np.intp)
    if x.data.ndim != 2:
        raise ShapeError(f"take_rows expects a matrix, got shape {x.data.shape}")

    def backfn(g, needs):
        dx = np.zeros_like(x.data)
        np.add.at(dx, idx, g)
        return (dx,)

    return _emit(x.data[idx], (x,), backfn)


def embedding_lookup(table: Tensor, ids) -> Tensor:
    idx = list(ids)
    n_rows = table.data.shape[0]
    for i in idx:
        if not 0 <= int(i) < n_rows:
            raise VocabularyError(f"id {i} outside vocabulary of size {n_rows}")
    return take_rows(table, idx)


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    y = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))), np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))

    def backfn(g, needs):
        return (g * y * (1.0 - y),)

    return _emit(y, (x,), backfn)


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def backfn(g, needs):
        return (g * (1.0 - y * y),)

    return _emit(y, (x,), backfn)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backfn(g, needs):
        return (g * mask,)

    return _emit(np.where(mask, x.data, 0.0), (x,), backfn)


def softmax(x: Tensor) -> Tensor:
    """Softmax along the last axis, stabilized by max subtraction."""
    if x.data.ndim == 0 or x.data.shape[-1] == 0:
        raise ShapeError(f"softmax needs a non-empty last axis, got shape {x.data.shape}")
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def backfn(g, needs):
        dot = (g * y).sum(axis=-1, keepdims=True)
        return (y * (g - dot),)

    return _emit(y, (x,), backfn)


def gumbel_softmax(logits: Tensor, temperature: float, rng: np.random.Generator | None = None) -> Tensor:
    """softmax((logits + g) / temperature) with g ~ Gumbel(0, 1).

    `rng=None` means zero noise, which makes the op deterministic (used by
    gradient checks and greedy paths).
    """
    if temperature <= 0:
        raise ValueError(f"gumbel_softmax temperature must be positive, got {temperature}")
    if logits.data.shape[-1] == 0:
        raise ShapeError("gumbel_softmax needs a non-empty last axis")
    if rng is None:
        noise = np.zeros_like(logits.data)
    else:
        u = np.clip(rng.random(logits.data.shape), GUMBEL_CLAMP, 1.0 - GUMBEL_CLAMP)
        noise = -np.log(-np.log(u))
    shifted = (logits.data + noise) / temperature
    shifted -= shifted.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    inv_t = 1.0 / temperature

    def backfn(g, needs):
        dot = (g * y).sum(axis=-1, keepdims=True)
        return (inv_t * y * (g - dot),)

    return _emit(y, (logits,), backfn)


def cross_entropy(probs: Tensor, label: int) -> Tensor:
    """-log probs[label] for a 1-D probability vector, clamped at the floor."""
    if probs.data.ndim != 1:
        raise ShapeError(f"cross_entropy expects a probability vector, got shape {probs.data.shape}")
    label = int(label)
    if not 0 <= label < probs.data.shape[0]:
        raise IndexError(f"label {label} out of range for {probs.data.shape[0]} classes")
    p = probs.data[label]
    clamped = p < PROB_FLOOR

    def backfn(g, needs):
        dp = np.zeros_like(probs.data)
        if not clamped:
            dp[label] = -float(g) / p
        return (dp,)

    return _emit(-math.log(max(p, PROB_FLOOR)), (probs,), backfn)


def nll_rows(probs: Tensor, labels) -> Tensor:
    """Sum of -log probs[t, labels[t]] over rows; the teacher-forcing loss."""
    if probs.data.ndim != 2:
        raise ShapeError(f"nll_rows expects a matrix of row distributions, got {probs.data.shape}")
    idx = np.asarray(labels, dtype=np.intp)
    if idx.shape[0] != probs.data.shape[0]:
        raise ShapeError(f"{probs.data.shape[0]} rows vs {idx.shape[0]} labels")
    rows = np.arange(idx.shape[0])
    picked = probs.data[rows, idx]
    safe = np.maximum(picked, PROB_FLOOR)

    def backfn(g, needs):
        dp = np.zeros_like(probs.data)
        live = picked >= PROB_FLOOR
        dp[rows[live], idx[live]] = -float(g) / picked[live]
        return (dp,)

    return _emit(-np.log(safe).sum(), (probs,), backfn)


def sum_all(x: Tensor) -> Tensor:
    shape = x.data.shape

    def backfn(g, needs):
        return (np.full(shape, float(g)),)

    return _emit(x.data.sum(), (x,), backfn)


def mean_rows(x: Tensor) -> Tensor:
    """Mean over the rows of a matrix, returning a vector."""
    if x.data.ndim != 2:
        raise ShapeError(f"mean_rows expects a matrix, got shape {x.data.shape}")
    n = x.data.shape[0]

    def backfn(g, needs):
        return (np.repeat(g[None, :] / n, n, axis=0),)

    return _emit(x.data.mean(axis=0), (x,), backfn)


def max_rows(x: Tensor) -> Tensor:
    """Columnwise max over rows (max-over-time pooling)."""
    if x.data.ndim != 2:
        raise ShapeError(f"max_rows expects a matrix, got shape {x.data.shape}")
    arg = x.data.argmax(axis=0)
    cols = np.arange(x.data.shape[1])

    def backfn(g, needs):
        dx = np.zeros_like(x.data)
        dx[arg, cols] = g
        return (dx,)

    return _emit(x.data[arg, cols], (x,), backfn)


def transpose(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got shape {x.data.shape}")

    def backfn(g, needs):
        return (g.T,)

    return _emit(x.data.T.copy(), (x,), backfn)


def batched_adj_matmul(adjacency: np.ndarray, h: Tensor, n: int) -> Tensor:
    """Per-example adjacency product over example-major stacked rows.

    `h` stacks B examples of n rows each (row b*n+i belongs to example b);
    `adjacency` is a constant (B, n, n) stack, or (n, n) shared by all
    examples. out[b*n+i] = sum_j adjacency[b, i, j] * h[b*n+j].
    """
    a = np.asarray(adjacency, dtype=np.float64)
    rows, d = h.data.shape
    if rows % n != 0:
        raise ShapeError(f"{rows} stacked rows is not a multiple of n={n}")
    batch = rows // n
    if a.ndim == 2:
        a = np.broadcast_to(a, (batch, n, n))
    if a.shape != (batch, n, n):
        raise ShapeError(f"adjacency stack {a.shape} does not match batch {batch} of {n}-row examples")
    h3 = h.data.reshape(batch, n, d)
    out = np.einsum("bij,bjd->bid", a, h3).reshape(rows, d)

    def backfn(g, needs):
        g3 = g.reshape(batch, n, d)
        return (np.einsum("bij,bid->bjd", a, g3).reshape(rows, d),)

    return _emit(out, (h,), backfn)


def reshape(x: Tensor, shape) -> Tensor:
    old = x.data.shape

    def backfn(g, needs):
        return (g.reshape(old),)

    return _emit(x.data.reshape(shape), (x,), backfn)


_ELEMENTWISE = {
    "add": add,
    "mul": mul,
    "concat-last-axis": lambda *ts: concat(list(ts), axis=-1),
    "sigmoid": sigmoid,
    "tanh": tanh,
    "relu": relu,
}


def elementwise(op: str, *inputs: Tensor) -> Tensor:
    """Dispatch by name over the supported elementwise family."""
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}; known: {sorted(_ELEMENTWISE)}") from None
    return fn(*inputs)


# ---------------------------------------------------------------------------
# gradient verification


def grad_check(f, params: list[Tensor], eps: float = 1e-5) -> float:
    """Max relative error between analytic gradients of f() and central differences.

    f must be deterministic given the params (freeze any noise sources).
    The relative error is |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    for p in params:
        p.grad = None
    with Tape():
        loss = f()
    backward(loss)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    def run() -> float:
        out = f()
        return float(out.data)

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        for i in range(flat.shape[0]):
            orig = flat[i]
            flat[i] = orig + eps
            up = run()
            flat[i] = orig - eps
            down = run()
            flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            ai = a.reshape(-1)[i]
            if not (math.isfinite(numeric) and math.isfinite(ai)):
                raise NumericError(f"non-finite value in grad_check: analytic={ai}, numeric={numeric}")
            err = abs(ai - numeric) / max(1.0, abs(ai), abs(numeric))
            worst = max(worst, err)
    return worst


# ---------------------------------------------------------------------------
# optimizers


@dataclass
class OptimizerState:
    """Update rule plus per-parameter moment accumulators."""

    learning_rate: float
    rule: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.rule not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer rule {self.rule!r}")


def optimizer_step(params: dict[str, Tensor], state: OptimizerState) -> None:
    """Apply one update to every parameter in place, then clear their grads."""
    missing = [name for name, p in params.items() if p.grad is None]
    if missing:
        raise ValueError(f"missing gradients for parameters: {missing}")
    state.step_count += 1
    if state.rule == "sgd":
        for name, p in params.items():
            p.data -= state.learning_rate * p.grad
            p.grad = None
        return
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** state.step_count
    bias2 = 1.0 - b2 ** state.step_count
    for name, p in params.items():
        g = p.grad
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= state.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
        p.grad = None
