"""Neural building blocks composed from autodiff ops.

Layers hold their parameter tensors and expose a `params(prefix)` dict so
models can collect everything for the optimizer and checkpoints. All
parameters are initialized uniformly in [-0.08, 0.08].
"""
from __future__ import annotations

import math

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

INIT_SCALE = 0.08

_ACTIVATIONS = {"relu": ad.relu, "tanh": ad.tanh, "sigmoid": ad.sigmoid}


def uniform_param(shape, rng: np.random.Generator) -> Tensor:
    return Tensor(rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape), requires_grad=True)


def activation_fn(name: str):
    try:
        return _ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; known: {sorted(_ACTIVATIONS)}") from None


class Linear:
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator):
        self.w = uniform_param((d_in, d_out), rng)
        self.b = uniform_param((d_out,), rng)

    def __call__(self, x: Tensor) -> Tensor:
        return ad.add_bias(ad.matmul(x, self.w), self.b)

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.w": self.w, f"{prefix}.b": self.b}


class LstmCell:
    """Fused-gate LSTM cell: one matmul computes i, f, o and the candidate."""

    def __init__(self, d_in: int, d_hidden: int, rng: np.random.Generator):
        self.d_hidden = d_hidden
        self.w = uniform_param((d_in + d_hidden, 4 * d_hidden), rng)
        self.b = uniform_param((4 * d_hidden,), rng)

    def step(self, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        d = self.d_hidden
        gates = ad.add_bias(ad.matmul(ad.concat([x, h], axis=-1), self.w), self.b)
        i = ad.sigmoid(ad.slice_cols(gates, 0, d))
        f = ad.sigmoid(ad.slice_cols(gates, d, 2 * d))
        o = ad.sigmoid(ad.slice_cols(gates, 2 * d, 3 * d))
        cand = ad.tanh(ad.slice_cols(gates, 3 * d, 4 * d))
        c_next = ad.add(ad.mul(f, c), ad.mul(i, cand))
        h_next = ad.mul(o, ad.tanh(c_next))
        return h_next, c_next

    def run(self, xs: Tensor, reverse: bool = False) -> list[Tensor]:
        """Unroll over the rows of xs; returns the hidden state of every step."""
        n = xs.data.shape[0]
        h = Tensor(np.zeros((1, self.d_hidden)))
        c = Tensor(np.zeros((1, self.d_hidden)))
        order = range(n - 1, -1, -1) if reverse else range(n)
        states: list[Tensor] = [None] * n  # type: ignore[list-item]
        for t in order:
            h, c = self.step(ad.take_rows(xs, [t]), h, c)
            states[t] = h
        return states

    def run_batched(self, xs: Tensor, n: int, batch: int, reverse: bool = False) -> list[Tensor]:
        """Unroll over example-major stacked rows (row b*n+t is step t of
        example b); step t gathers one row per example, so each gate matmul
        covers the whole batch."""
        h = Tensor(np.zeros((batch, self.d_hidden)))
        c = Tensor(np.zeros((batch, self.d_hidden)))
        base = np.arange(batch) * n
        order = range(n - 1, -1, -1) if reverse else range(n)
        states: list[Tensor] = [None] * n  # type: ignore[list-item]
        for t in order:
            h, c = self.step(ad.take_rows(xs, base + t), h, c)
            states[t] = h
        return states

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.w": self.w, f"{prefix}.b": self.b}


class BiLstm:
    def __init__(self, d_in: int, d_hidden: int, rng: np.random.Generator):
        self.fwd = LstmCell(d_in, d_hidden, rng)
        self.bwd = LstmCell(d_in, d_hidden, rng)

    def __call__(self, xs: Tensor) -> Tensor:
        """Rows of the result are [forward_state_t ; backward_state_t]."""
        f_states = self.fwd.run(xs)
        b_states = self.bwd.run(xs, reverse=True)
        rows = [ad.concat([f, b], axis=-1) for f, b in zip(f_states, b_states)]
        return rows[0] if len(rows) == 1 else ad.concat(rows, axis=0)

    def batched(self, xs: Tensor, n: int, batch: int) -> Tensor:
        """Example-major stacked states: row b*n+t is [fwd_t ; bwd_t] of example b."""
        f_states = self.fwd.run_batched(xs, n, batch)
        b_states = self.bwd.run_batched(xs, n, batch, reverse=True)
        steps = [ad.concat([f, b], axis=-1) for f, b in zip(f_states, b_states)]
        stacked = steps[0] if len(steps) == 1 else ad.concat(steps, axis=0)  # row t*batch+b
        perm = [t * batch + b for b in range(batch) for t in range(n)]
        return ad.take_rows(stacked, perm)

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {**self.fwd.params(f"{prefix}.fwd"), **self.bwd.params(f"{prefix}.bwd")}


class GruCell:
    """Single-layer GRU for the syntax-free encoder ablation."""

    def __init__(self, d_in: int, d_hidden: int, rng: np.random.Generator):
        self.d_hidden = d_hidden
        self.w = uniform_param((d_in + d_hidden, 3 * d_hidden), rng)
        self.b = uniform_param((3 * d_hidden,), rng)

    def step(self, x: Tensor, h: Tensor) -> Tensor:
        d = self.d_hidden
        gates = ad.add_bias(ad.matmul(ad.concat([x, h], axis=-1), self.w), self.b)
        r = ad.sigmoid(ad.slice_cols(gates, 0, d))
        u = ad.sigmoid(ad.slice_cols(gates, d, 2 * d))
        # candidate re-reads the gated state through the same fused weights
        rh = ad.mul(r, h)
        cand_in = ad.concat([x, rh], axis=-1)
        cand = ad.tanh(ad.slice_cols(ad.add_bias(ad.matmul(cand_in, self.w), self.b), 2 * d, 3 * d))
        one_minus_u = ad.add(Tensor(np.ones_like(u.data)), ad.scale(u, -1.0))
        return ad.add(ad.mul(one_minus_u, h), ad.mul(u, cand))

    def last_state(self, xs: Tensor) -> Tensor:
        h = Tensor(np.zeros((1, self.d_hidden)))
        for t in range(xs.data.shape[0]):
            h = self.step(ad.take_rows(xs, [t]), h)
        return h

    def last_state_batched(self, xs: Tensor, n: int, batch: int) -> Tensor:
        h = Tensor(np.zeros((batch, self.d_hidden)))
        base = np.arange(batch) * n
        for t in range(n):
            h = self.step(ad.take_rows(xs, base + t), h)
        return h

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.w": self.w, f"{prefix}.b": self.b}


class GcnLayer:
    """sigma(A H W + b) over an n x n adjacency; sigma defaults to ReLU."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, activation: str = "relu"):
        self.w = uniform_param((d_in, d_out), rng)
        self.b = uniform_param((d_out,), rng)
        self.act = activation_fn(activation)

    def __call__(self, h: Tensor, a: Tensor) -> Tensor:
        return self.act(ad.add_bias(ad.matmul(ad.matmul(a, h), self.w), self.b))

    def batched(self, h: Tensor, a_stack: np.ndarray, n: int) -> Tensor:
        """Same layer over example-major stacked rows with per-example adjacency."""
        return self.act(ad.add_bias(ad.matmul(ad.batched_adj_matmul(a_stack, h, n), self.w), self.b))

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.w": self.w, f"{prefix}.b": self.b}


def attention_pool(h: Tensor) -> Tensor:
    """Scaled dot-product self-attention followed by a mean over positions.

    Queries, keys and values are all the input rows; returns a single vector.
    """
    d = h.data.shape[-1]
    scores = ad.scale(ad.matmul(h, ad.transpose(h)), 1.0 / math.sqrt(d))
    mixed = ad.matmul(ad.softmax(scores), h)
    return ad.mean_rows(mixed)


def soft_embed(table: Tensor, probs: Tensor) -> Tensor:
    """Probability-weighted mix of embedding rows: one row per distribution."""
    return ad.matmul(probs, table)


def conv_max(emb: Tensor, w: Tensor, b: Tensor, width: int) -> Tensor:
    """Width-`width` text convolution with ReLU and max-over-time pooling.

    Sentences shorter than the filter width are zero-padded.
    """
    n, d = emb.data.shape
    if n < width:
        pad = Tensor(np.zeros((width - n, d)))
        emb = ad.concat([emb, pad], axis=0)
        n = width
    windows = [ad.reshape(ad.take_rows(emb, list(range(t, t + width))), (1, width * d))
               for t in range(n - width + 1)]
    stacked = windows[0] if len(windows) == 1 else ad.concat(windows, axis=0)
    feats = ad.relu(ad.add_bias(ad.matmul(stacked, w), b))
    return ad.max_rows(feats)
