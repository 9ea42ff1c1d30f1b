"""Reverse-mode differentiation over dense float64 2-D tensors."""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, softmax

from anchorplan.errors import NumericError, ShapeError
from anchorplan.typ import FloatArray

Backward = Callable[[FloatArray], Sequence[FloatArray | None]]


class Tensor2:
    __slots__ = ("data", "name")

    def __init__(self, data: FloatArray, name: str = "") -> None:
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"Tensor2 needs a 2-D array, got shape {arr.shape}")
        self.data = arr
        self.name = name

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def cols(self) -> int:
        return int(self.data.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def item(self) -> float:
        if self.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def __repr__(self) -> str:
        return f"Tensor2({self.name or '?'}, shape={self.shape})"


class Parameter(Tensor2):
    """Trainable leaf; gradients accumulate into ``grad`` until ``zero_grad``."""

    __slots__ = ("grad",)

    def __init__(self, data: FloatArray, name: str = "") -> None:
        super().__init__(np.array(data, dtype=np.float64), name)
        self.grad = np.zeros_like(self.data)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)


@dataclass(slots=True)
class _Node:
    op: str
    out: Tensor2
    parents: tuple[Tensor2, ...]
    backward: Backward


def _finite(values: FloatArray, what: str) -> FloatArray:
    if not np.all(np.isfinite(values)):
        raise NumericError(f"non-finite values in {what}")
    return values


def _same_shape(op: str, *ts: Tensor2) -> None:
    if len({t.shape for t in ts}) != 1:
        raise ShapeError(f"{op}: shape mismatch {[t.shape for t in ts]}")


class Graph:
    def __init__(self) -> None:
        self._tape: list[_Node] = []
        self._outputs: set[int] = set()

    def __len__(self) -> int:
        return len(self._tape)

    @staticmethod
    def constant(data: FloatArray | Sequence[Sequence[float]], name: str = "") -> Tensor2:
        return Tensor2(np.asarray(data, dtype=np.float64), name)

    def _record(
        self, op: str, data: FloatArray, parents: tuple[Tensor2, ...], backward: Backward
    ) -> Tensor2:
        out = Tensor2(_finite(data, op), op)
        self._tape.append(_Node(op, out, parents, backward))
        self._outputs.add(id(out))
        return out

    def backward(self, loss: Tensor2) -> None:
        """Accumulate d(loss)/d(parameter) into every reachable ``Parameter.grad``."""
        if loss.shape != (1, 1):
            raise ShapeError(f"loss must be 1x1, got {loss.shape}")
        if id(loss) not in self._outputs:
            raise ValueError("loss was not recorded on this graph (run forward first)")
        grads: dict[int, FloatArray] = {id(loss): np.ones((1, 1))}
        for node in reversed(self._tape):
            g = grads.pop(id(node.out), None)
            if g is None:
                continue
            for parent, pg in zip(node.parents, node.backward(g), strict=True):
                if pg is None:
                    continue
                _finite(pg, f"gradient of {node.op}")
                if isinstance(parent, Parameter):
                    parent.grad += pg
                elif id(parent) in self._outputs:
                    key = id(parent)
                    grads[key] = grads[key] + pg if key in grads else pg

    # ---- linear algebra -------------------------------------------------

    def matmul(self, a: Tensor2, b: Tensor2) -> Tensor2:
        if a.cols != b.rows:
            raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
        return self._record(
            "matmul",
            a.data @ b.data,
            (a, b),
            lambda g: (g @ b.data.T, a.data.T @ g),
        )

    def add(self, a: Tensor2, b: Tensor2) -> Tensor2:
        _same_shape("add", a, b)
        return self._record("add", a.data + b.data, (a, b), lambda g: (g, g))

    def add_bias(self, a: Tensor2, bias: Tensor2) -> Tensor2:
        """a + bias with a (1, cols) bias broadcast over rows."""
        if bias.rows != 1 or bias.cols != a.cols:
            raise ShapeError(f"add_bias: {a.shape} + {bias.shape}")
        return self._record(
            "add_bias",
            a.data + bias.data,
            (a, bias),
            lambda g: (g, g.sum(axis=0, keepdims=True)),
        )

    def sub(self, a: Tensor2, b: Tensor2) -> Tensor2:
        _same_shape("sub", a, b)
        return self._record("sub", a.data - b.data, (a, b), lambda g: (g, -g))

    def mul(self, a: Tensor2, b: Tensor2) -> Tensor2:
        _same_shape("mul", a, b)
        return self._record(
            "mul", a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data)
        )

    def scale(self, a: Tensor2, factor: float) -> Tensor2:
        return self._record("scale", a.data * factor, (a,), lambda g: (g * factor,))

    def transpose(self, a: Tensor2) -> Tensor2:
        return self._record("transpose", a.data.T.copy(), (a,), lambda g: (g.T,))

    def reshape(self, a: Tensor2, rows: int, cols: int) -> Tensor2:
        """Row-major reshape."""
        if rows * cols != a.rows * a.cols:
            raise ShapeError(f"reshape: {a.shape} -> ({rows}, {cols})")
        shape = a.shape
        return self._record(
            "reshape",
            a.data.reshape(rows, cols).copy(),
            (a,),
            lambda g: (g.reshape(shape),),
        )

    # ---- structure ------------------------------------------------------

    def concat_rows(self, parts: Sequence[Tensor2]) -> Tensor2:
        if len({p.cols for p in parts}) != 1:
            raise ShapeError(f"concat_rows: {[p.shape for p in parts]}")
        bounds = np.cumsum([0] + [p.rows for p in parts])
        return self._record(
            "concat_rows",
            np.vstack([p.data for p in parts]),
            tuple(parts),
            lambda g: [g[lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:], strict=True)],
        )

    def concat_cols(self, parts: Sequence[Tensor2]) -> Tensor2:
        if len({p.rows for p in parts}) != 1:
            raise ShapeError(f"concat_cols: {[p.shape for p in parts]}")
        bounds = np.cumsum([0] + [p.cols for p in parts])
        return self._record(
            "concat_cols",
            np.hstack([p.data for p in parts]),
            tuple(parts),
            lambda g: [
                g[:, lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:], strict=True)
            ],
        )

    def slice_cols(self, a: Tensor2, start: int, stop: int) -> Tensor2:
        if not 0 <= start < stop <= a.cols:
            raise ShapeError(f"slice_cols [{start}:{stop}] of {a.shape}")

        def back(g: FloatArray) -> list[FloatArray]:
            full = np.zeros_like(a.data)
            full[:, start:stop] = g
            return [full]

        return self._record("slice_cols", a.data[:, start:stop].copy(), (a,), back)

    def select_rows(self, a: Tensor2, index: Sequence[int]) -> Tensor2:
        idx = np.asarray(index, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= a.rows):
            raise ShapeError(f"select_rows {idx.tolist()} of {a.shape}")

        def back(g: FloatArray) -> list[FloatArray]:
            full = np.zeros_like(a.data)
            np.add.at(full, idx, g)
            return [full]

        return self._record("select_rows", a.data[idx].copy(), (a,), back)

    # ---- reductions -----------------------------------------------------

    def sum_cols(self, a: Tensor2) -> Tensor2:
        """Per-row sum across columns, giving (rows, 1)."""
        return self._record(
            "sum_cols",
            a.data.sum(axis=1, keepdims=True),
            (a,),
            lambda g: (np.broadcast_to(g, a.shape).copy(),),
        )

    def mean_all(self, a: Tensor2) -> Tensor2:
        n = a.data.size
        return self._record(
            "mean_all",
            np.array([[a.data.mean()]]),
            (a,),
            lambda g: (np.full(a.shape, g[0, 0] / n),),
        )

    # ---- elementwise nonlinearities ------------------------------------

    def relu(self, a: Tensor2) -> Tensor2:
        mask = a.data > 0
        return self._record("relu", a.data * mask, (a,), lambda g: (g * mask,))

    def silu(self, a: Tensor2) -> Tensor2:
        s = expit(a.data)
        return self._record(
            "silu",
            a.data * s,
            (a,),
            lambda g: (g * (s + a.data * s * (1.0 - s)),),
        )

    def sqrt_eps(self, a: Tensor2, eps: float = 1e-6) -> Tensor2:
        """sqrt(a + eps^2) - eps: zero at zero, smooth everywhere on a >= 0."""
        root = np.sqrt(a.data + eps * eps)
        return self._record(
            "sqrt_eps", root - eps, (a,), lambda g: (g / (2.0 * root),)
        )

    def softmax_rows(self, a: Tensor2) -> Tensor2:
        s = softmax(a.data, axis=1)
        return self._record(
            "softmax_rows",
            s,
            (a,),
            lambda g: (s * (g - (g * s).sum(axis=1, keepdims=True)),),
        )

    def layer_norm(
        self,
        a: Tensor2,
        gamma: Tensor2 | None = None,
        beta: Tensor2 | None = None,
        eps: float = 1e-5,
    ) -> Tensor2:
        """Row-wise normalization, then the optional (1, cols) affine."""
        mu = a.data.mean(axis=1, keepdims=True)
        inv = 1.0 / np.sqrt(a.data.var(axis=1, keepdims=True) + eps)
        xhat = (a.data - mu) * inv
        out = xhat.copy()
        if gamma is not None:
            out = out * gamma.data
        if beta is not None:
            out = out + beta.data
        parents: tuple[Tensor2, ...] = (a,) + tuple(
            p for p in (gamma, beta) if p is not None
        )

        def back(g: FloatArray) -> list[FloatArray]:
            dxhat = g * gamma.data if gamma is not None else g
            dx = inv * (
                dxhat
                - dxhat.mean(axis=1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)
            )
            grads = [dx]
            if gamma is not None:
                grads.append((g * xhat).sum(axis=0, keepdims=True))
            if beta is not None:
                grads.append(g.sum(axis=0, keepdims=True))
            return grads

        return self._record("layer_norm", out, parents, back)

    # ---- losses ---------------------------------------------------------

    def bce_with_logits(self, logits: Tensor2, targets: FloatArray) -> Tensor2:
        """Mean binary cross-entropy against constant soft targets in [0, 1]."""
        y = np.asarray(targets, dtype=np.float64).reshape(logits.shape)
        z = logits.data
        losses = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
        n = z.size
        return self._record(
            "bce_with_logits",
            np.array([[losses.mean()]]),
            (logits,),
            lambda g: (g[0, 0] * (expit(z) - y) / n,),
        )


def scaled_dot_attention(
    g: Graph, q: Tensor2, k: Tensor2, v: Tensor2, heads: int
) -> tuple[Tensor2, list[FloatArray]]:
    """Per-head softmax(Q K^T / sqrt(d_head)) V with heads concatenated.

    Returns the (n_q, width) output and the per-head (n_q, n_k) weight matrices.
    """
    width = q.cols
    if k.cols != width or v.cols != width or k.rows != v.rows:
        raise ShapeError(f"attention: q {q.shape}, k {k.shape}, v {v.shape}")
    if heads < 1 or width % heads:
        raise ShapeError(f"width {width} is not divisible by {heads} heads")
    d = width // heads
    outs: list[Tensor2] = []
    weights: list[FloatArray] = []
    for h in range(heads):
        lo, hi = h * d, (h + 1) * d
        qh = g.slice_cols(q, lo, hi) if heads > 1 else q
        kh = g.slice_cols(k, lo, hi) if heads > 1 else k
        vh = g.slice_cols(v, lo, hi) if heads > 1 else v
        scores = g.scale(g.matmul(qh, g.transpose(kh)), 1.0 / math.sqrt(d))
        w = g.softmax_rows(scores)
        weights.append(w.data)
        outs.append(g.matmul(w, vh))
    return (g.concat_cols(outs) if heads > 1 else outs[0]), weights
