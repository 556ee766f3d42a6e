"""Reverse-mode automatic differentiation on dense float64 arrays.

The engine is a flat tape: every operation appends one node to a Graph and
remembers how to push gradients back to its inputs. The backward pass walks
the tape strictly in reverse construction order, so forward values and
gradient accumulation order are deterministic (bit-identical across runs on
identical inputs).

Primitives: matmul, add (same shape, or a trailing-axis bias broadcast),
elementwise mul, affine (k*x + c with scalar constants), sigmoid, tanh, exp,
concat / narrow along the last axis, softmax over the last axis, categorical
cross-entropy from logits, and full sum / mean reductions. That is the whole
op surface the melody model needs; broadcasting beyond bias-add is
intentionally unsupported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not conform for an op."""


class GraphError(ValueError):
    """A graph-level contract was violated (non-scalar loss, mixed graphs)."""


class Tensor:
    """Value of one graph node: an immutable float64 ndarray.

    ``grad`` is populated by ``Graph.backward`` for every node the loss
    depends on differentiably; it stays ``None`` elsewhere.
    """

    __slots__ = ("graph", "node_id", "data", "grad")

    def __init__(self, graph: "Graph", node_id: int, data: np.ndarray):
        self.graph = graph
        self.node_id = node_id
        self.data = data
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def needs_grad(self) -> bool:
        return self.graph.nodes[self.node_id].needs_grad

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __repr__(self) -> str:
        return f"Tensor(node={self.node_id}, shape={self.shape})"


class _Node:
    __slots__ = ("op", "input_ids", "tensor", "vjp", "needs_grad")

    def __init__(self, op, input_ids, tensor, vjp, needs_grad):
        self.op = op
        self.input_ids = input_ids
        self.tensor = tensor
        self.vjp = vjp  # callable(upstream) -> [(input_id, grad), ...] or None
        self.needs_grad = needs_grad


class Graph:
    """An append-only tape of operations.

    Nodes are identified by construction index; inputs of node i always have
    ids < i, so reverse iteration is a valid reverse-topological order.
    """

    def __init__(self):
        self.nodes: list[_Node] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def leaf(self, data, requires_grad: bool = True) -> Tensor:
        """Register an input tensor. Data is coerced to a float64 array."""
        arr = np.asarray(data, dtype=np.float64)
        return self._append("leaf", (), arr, None, requires_grad)

    def _append(self, op, inputs, data, make_vjp, needs_grad=None) -> Tensor:
        input_ids = tuple(t.node_id for t in inputs)
        for t in inputs:
            if t.graph is not self:
                raise GraphError(f"{op}: operand from a different graph")
        if needs_grad is None:
            needs_grad = any(self.nodes[i].needs_grad for i in input_ids)
        tensor = Tensor(self, len(self.nodes), data)
        # vjp closures are only materialized on paths that can reach a
        # differentiable leaf; pure-constant subgraphs stay cheap.
        vjp = make_vjp() if (needs_grad and make_vjp is not None) else None
        self.nodes.append(_Node(op, input_ids, tensor, vjp, needs_grad))
        return tensor

    def backward(self, loss: Tensor) -> dict[int, np.ndarray]:
        """Accumulate d(loss)/d(node) for every node reachable from ``loss``.

        Returns a dict mapping leaf node ids to gradients (zeros for leaves
        the loss does not depend on). Also sets ``tensor.grad`` on every
        visited node, which is how gradients at interior nodes (e.g. a latent
        code) are inspected.
        """
        if loss.graph is not self:
            raise GraphError("backward: loss belongs to a different graph")
        if loss.data.shape != ():
            raise GraphError(
                f"backward: loss must be a scalar node, got shape {loss.data.shape}"
            )
        grads: list[np.ndarray | None] = [None] * len(self.nodes)
        grads[loss.node_id] = np.ones((), dtype=np.float64)
        for i in range(loss.node_id, -1, -1):
            node = self.nodes[i]
            g = grads[i]
            if g is None or not node.needs_grad:
                continue
            node.tensor.grad = g
            if node.vjp is None:
                continue
            for j, contrib in node.vjp(g):
                if not self.nodes[j].needs_grad:
                    continue
                grads[j] = contrib if grads[j] is None else grads[j] + contrib
        out: dict[int, np.ndarray] = {}
        for i, node in enumerate(self.nodes):
            if node.op == "leaf" and node.needs_grad:
                if grads[i] is None:
                    node.tensor.grad = np.zeros_like(node.tensor.data)
                out[i] = node.tensor.grad
        return out


def _reject(op: str, msg: str):
    raise ShapeError(f"{op}: {msg}")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D matrix product."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        _reject("matmul", f"shapes do not conform: {a.shape} @ {b.shape}")

    def make_vjp():
        ad, bd = a.data, b.data
        need_a, need_b = a.needs_grad, b.needs_grad

        def vjp(g):
            out = []
            if need_a:
                out.append((a.node_id, g @ bd.T))
            if need_b:
                out.append((b.node_id, ad.T @ g))
            return out

        return vjp

    return a.graph._append("matmul", (a, b), a.data @ b.data, make_vjp)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; ``b`` may be a 1-D bias broadcast over leading axes."""
    bias = b.data.ndim == 1 and a.data.ndim > 1
    if bias:
        if a.shape[-1] != b.shape[0]:
            _reject("add", f"bias does not match trailing axis: {a.shape} + {b.shape}")
    elif a.shape != b.shape:
        _reject("add", f"shapes differ: {a.shape} + {b.shape}")

    def make_vjp():
        def vjp(g):
            if bias:
                return [
                    (a.node_id, g),
                    (b.node_id, g.reshape(-1, g.shape[-1]).sum(axis=0)),
                ]
            return [(a.node_id, g), (b.node_id, g)]

        return vjp

    return a.graph._append("add", (a, b), a.data + b.data, make_vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product of same-shape tensors."""
    if a.shape != b.shape:
        _reject("mul", f"shapes differ: {a.shape} * {b.shape}")

    def make_vjp():
        ad, bd = a.data, b.data

        def vjp(g):
            return [(a.node_id, g * bd), (b.node_id, g * ad)]

        return vjp

    return a.graph._append("mul", (a, b), a.data * b.data, make_vjp)


def affine(a: Tensor, k: float, c: float = 0.0) -> Tensor:
    """k * a + c with python-scalar constants (not differentiated)."""
    k = float(k)

    def make_vjp():
        def vjp(g):
            return [(a.node_id, k * g)]

        return vjp

    return a.graph._append("affine", (a,), k * a.data + float(c), make_vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    """a - b, composed from add and affine."""
    return add(a, affine(b, -1.0))


def _sigmoid_raw(x: np.ndarray) -> np.ndarray:
    # exp overflow for very negative x harmlessly saturates to 0
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def sigmoid(a: Tensor) -> Tensor:
    out = _sigmoid_raw(a.data)

    def make_vjp():
        def vjp(g):
            return [(a.node_id, g * out * (1.0 - out))]

        return vjp

    return a.graph._append("sigmoid", (a,), out, make_vjp)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def make_vjp():
        def vjp(g):
            return [(a.node_id, g * (1.0 - out * out))]

        return vjp

    return a.graph._append("tanh", (a,), out, make_vjp)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)

    def make_vjp():
        def vjp(g):
            return [(a.node_id, g * out)]

        return vjp

    return a.graph._append("exp", (a,), out, make_vjp)


def concat(parts: list[Tensor] | tuple[Tensor, ...]) -> Tensor:
    """Concatenate along the last axis."""
    if not parts:
        _reject("concat", "needs at least one operand")
    lead = parts[0].shape[:-1]
    for p in parts[1:]:
        if p.shape[:-1] != lead:
            _reject(
                "concat",
                f"leading axes differ: {parts[0].shape} vs {p.shape}",
            )
    widths = [p.shape[-1] for p in parts]
    offsets = np.cumsum([0] + widths)

    def make_vjp():
        ids = [p.node_id for p in parts]

        def vjp(g):
            return [
                (ids[i], g[..., offsets[i] : offsets[i + 1]])
                for i in range(len(ids))
            ]

        return vjp

    data = np.concatenate([p.data for p in parts], axis=-1)
    return parts[0].graph._append("concat", tuple(parts), data, make_vjp)


def narrow(a: Tensor, start: int, size: int) -> Tensor:
    """Slice ``size`` entries of the last axis starting at ``start``."""
    dim = a.shape[-1] if a.data.ndim else 0
    if size < 1 or start < 0 or start + size > dim:
        _reject("narrow", f"slice [{start}:{start + size}] out of range for {a.shape}")

    def make_vjp():
        shape = a.shape

        def vjp(g):
            full = np.zeros(shape, dtype=np.float64)
            full[..., start : start + size] = g
            return [(a.node_id, full)]

        return vjp

    return a.graph._append("narrow", (a,), a.data[..., start : start + size], make_vjp)


def narrow_rows(a: Tensor, start: int, size: int) -> Tensor:
    """Slice ``size`` rows of the first axis starting at ``start``."""
    rows = a.shape[0] if a.data.ndim else 0
    if a.data.ndim < 1 or size < 1 or start < 0 or start + size > rows:
        _reject(
            "narrow_rows", f"slice [{start}:{start + size}] out of range for {a.shape}"
        )

    def make_vjp():
        shape = a.shape

        def vjp(g):
            full = np.zeros(shape, dtype=np.float64)
            full[start : start + size] = g
            return [(a.node_id, full)]

        return vjp

    return a.graph._append("narrow_rows", (a,), a.data[start : start + size], make_vjp)


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis; output rows form a probability vector."""
    x = a.data
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def make_vjp():
        def vjp(g):
            inner = (g * out).sum(axis=-1, keepdims=True)
            return [(a.node_id, out * (g - inner))]

        return vjp

    return a.graph._append("softmax", (a,), out, make_vjp)


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Per-row categorical cross-entropy from logits.

    ``logits`` is (B, K); ``targets`` an integer array of shape (B,). The
    result has shape (B,); reduce it with ``reduce_mean``/``reduce_sum``.
    """
    t = np.asarray(targets)
    if logits.data.ndim != 2:
        _reject("cross_entropy", f"logits must be 2-D, got {logits.shape}")
    if t.shape != (logits.shape[0],):
        _reject(
            "cross_entropy",
            f"targets shape {t.shape} does not match logits {logits.shape}",
        )
    if not np.issubdtype(t.dtype, np.integer):
        raise ValueError("cross_entropy: targets must be integers")
    k = logits.shape[1]
    if t.min() < 0 or t.max() >= k:
        raise ValueError(f"cross_entropy: target out of range [0, {k})")
    x = logits.data
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    denom = e.sum(axis=-1)
    probs = e / denom[:, None]
    rows = np.arange(x.shape[0])
    out = np.log(denom) - shifted[rows, t]

    def make_vjp():
        def vjp(g):
            contrib = probs * g[:, None]
            contrib[rows, t] -= g
            return [(logits.node_id, contrib)]

        return vjp

    return logits.graph._append("cross_entropy", (logits,), out, make_vjp)


def reduce_sum(a: Tensor) -> Tensor:
    """Sum of all elements, as a scalar node."""

    def make_vjp():
        shape = a.shape

        def vjp(g):
            return [(a.node_id, np.full(shape, float(g)))]

        return vjp

    return a.graph._append("sum", (a,), np.asarray(a.data.sum()), make_vjp)


def reduce_mean(a: Tensor) -> Tensor:
    """Mean of all elements, as a scalar node."""
    n = a.data.size

    def make_vjp():
        shape = a.shape

        def vjp(g):
            return [(a.node_id, np.full(shape, float(g) / n))]

        return vjp

    return a.graph._append("mean", (a,), np.asarray(a.data.mean()), make_vjp)


# ---------------------------------------------------------------------------
# GRU cell


@dataclass
class GruParams:
    """Graph tensors for one GRU cell.

    ``wx`` packs the input weights of the update/reset/candidate gates as
    (in_dim, 3H) and ``bx`` their biases; ``uh`` packs the recurrent weights
    the same way as (H, 3H). The candidate's recurrent block is gated by the
    reset gate before the tanh.
    """

    wx: Tensor
    bx: Tensor
    uh: Tensor

    @property
    def hidden(self) -> int:
        return self.uh.shape[0]


def gru_cell(x_t: Tensor, h_prev: Tensor, p: GruParams) -> Tensor:
    """One GRU step: h_t = (1 - u) * h_prev + u * candidate.

    Gates: u = sig(Wu x + Uu h + bu), r = sig(Wr x + Ur h + br), candidate
    n = tanh(Wn x + bn + r * (Un h)), so the reset gate scales the recurrent
    term. At zero parameters u = 0.5 and n = 0, giving h_t = 0.5 * h_prev.

    Implemented as one fused node with a hand-derived backward; its
    gradients are covered by the same finite-difference checks as the
    primitives.
    """
    hid = p.hidden
    if x_t.data.ndim != 2 or h_prev.data.ndim != 2 or x_t.shape[0] != h_prev.shape[0]:
        _reject("gru_cell", f"batch dims differ: x {x_t.shape}, h {h_prev.shape}")
    if x_t.shape[1] != p.wx.shape[0] or h_prev.shape[1] != hid:
        _reject(
            "gru_cell",
            f"inputs x {x_t.shape}, h {h_prev.shape} vs weights "
            f"wx {p.wx.shape}, uh {p.uh.shape}",
        )
    x, h = x_t.data, h_prev.data
    wx, bx, uh = p.wx.data, p.bx.data, p.uh.data
    pre = x @ wx + bx  # (B, 3H)
    ha = h @ uh  # (B, 3H)
    ur = _sigmoid_raw(pre[:, : 2 * hid] + ha[:, : 2 * hid])
    u, r = ur[:, :hid], ur[:, hid:]
    hn = ha[:, 2 * hid :]
    n = np.tanh(pre[:, 2 * hid :] + r * hn)
    out = h + u * (n - h)

    def make_vjp():
        needs = {
            "x": x_t.needs_grad,
            "h": h_prev.needs_grad,
            "wx": p.wx.needs_grad,
            "bx": p.bx.needs_grad,
            "uh": p.uh.needs_grad,
        }

        def vjp(g):
            dn = g * u
            da_n = dn * (1.0 - n * n)
            du = g * (n - h)
            da_u = du * u * (1.0 - u)
            dr = da_n * hn
            da_r = dr * r * (1.0 - r)
            dpre = np.concatenate([da_u, da_r, da_n], axis=1)
            dha = np.concatenate([da_u, da_r, da_n * r], axis=1)
            contribs = []
            if needs["x"]:
                contribs.append((x_t.node_id, dpre @ wx.T))
            if needs["h"]:
                dh = g * (1.0 - u) + dha @ uh.T
                contribs.append((h_prev.node_id, dh))
            if needs["wx"]:
                contribs.append((p.wx.node_id, x.T @ dpre))
            if needs["bx"]:
                contribs.append((p.bx.node_id, dpre.sum(axis=0)))
            if needs["uh"]:
                contribs.append((p.uh.node_id, h.T @ dha))
            return contribs

        return vjp

    return x_t.graph._append("gru_cell", (x_t, h_prev, p.wx, p.bx, p.uh), out, make_vjp)


def gru_sequence(
    p: GruParams,
    h0: Tensor,
    steps: int,
    const: np.ndarray | None = None,
    shared: Tensor | None = None,
    seq: Tensor | None = None,
    start: Tensor | None = None,
) -> Tensor:
    """Unroll a GRU over ``steps`` timesteps as one fused node.

    The per-step input is the column concatenation [const_t, shared, seq_t]:
    ``const`` is a (T, B, Dc) plain array baked into the node, ``shared`` a
    (B, Ds) tensor fed identically at every step, and ``seq`` a (T*B, Dq)
    tensor whose row block t*B:(t+1)*B is step t's input. ``p.wx`` rows are
    consumed in that column order. ``start``, when given, is a learned
    (D0,) vector added onto the first D0 input columns at step 0 only (the
    caller zeroes the matching const columns there).

    Returns the stacked hidden states as a (T*B, H) tensor in step-major row
    blocks. The loop math matches ``gru_cell`` exactly; the fused backward
    batches the input-side and weight-gradient matmuls across all steps.
    """
    if steps < 1:
        raise GraphError("gru_sequence: steps must be >= 1")
    if h0.data.ndim != 2:
        _reject("gru_sequence", f"h0 must be 2-D, got {h0.shape}")
    batch, hid = h0.shape
    if hid != p.hidden:
        _reject("gru_sequence", f"h0 {h0.shape} vs uh {p.uh.shape}")
    dc = ds = dq = 0
    if const is not None:
        const = np.asarray(const, dtype=np.float64)
        if const.shape[:2] != (steps, batch):
            _reject("gru_sequence", f"const {const.shape} vs (T={steps}, B={batch})")
        dc = const.shape[2]
    if shared is not None:
        if shared.data.ndim != 2 or shared.shape[0] != batch:
            _reject("gru_sequence", f"shared must be (B, Ds), got {shared.shape}")
        ds = shared.shape[1]
    if seq is not None:
        if seq.data.ndim != 2 or seq.shape[0] != steps * batch:
            _reject("gru_sequence", f"seq must be (T*B, Dq), got {seq.shape}")
        dq = seq.shape[1]
    if p.wx.shape[0] != dc + ds + dq:
        _reject(
            "gru_sequence",
            f"wx rows {p.wx.shape[0]} != input width {dc}+{ds}+{dq}",
        )
    d0 = 0
    if start is not None:
        d0 = start.data.size
        if start.data.ndim != 1 or d0 > dc:
            _reject("gru_sequence", f"start {start.shape} exceeds const width {dc}")

    wx, bx, uh = p.wx.data, p.bx.data, p.uh.data
    pre = np.zeros((steps * batch, 3 * hid))
    if const is not None:
        np.matmul(const.reshape(steps * batch, dc), wx[:dc], out=pre)
    if shared is not None:
        pre.reshape(steps, batch, 3 * hid)[:] += shared.data @ wx[dc : dc + ds]
    if seq is not None:
        pre += seq.data @ wx[dc + ds :]
    pre += bx
    if start is not None:
        pre.reshape(steps, batch, 3 * hid)[0] += start.data @ wx[:d0]

    h_prev = np.empty((steps, batch, hid))
    u_all = np.empty((steps, batch, hid))
    r_all = np.empty((steps, batch, hid))
    n_all = np.empty((steps, batch, hid))
    hn_all = np.empty((steps, batch, hid))
    out_all = np.empty((steps, batch, hid))
    h = h0.data
    for t in range(steps):
        h_prev[t] = h
        ha = h @ uh
        pt = pre[t * batch : (t + 1) * batch]
        ur = _sigmoid_raw(pt[:, : 2 * hid] + ha[:, : 2 * hid])
        u, r = ur[:, :hid], ur[:, hid:]
        hn = ha[:, 2 * hid :]
        n = np.tanh(pt[:, 2 * hid :] + r * hn)
        h = h + u * (n - h)
        u_all[t] = u
        r_all[t] = r
        n_all[t] = n
        hn_all[t] = hn
        out_all[t] = h

    inputs = [h0, p.wx, p.bx, p.uh]
    if shared is not None:
        inputs.append(shared)
    if seq is not None:
        inputs.append(seq)
    if start is not None:
        inputs.append(start)

    def make_vjp():
        needs = {t.node_id: t.needs_grad for t in inputs}

        def vjp(g):
            big = g.reshape(steps, batch, hid)
            dpre = np.empty((steps, batch, 3 * hid))
            dha = np.empty((steps, batch, 3 * hid))
            dh = np.zeros((batch, hid))
            for t in range(steps - 1, -1, -1):
                gh = big[t] + dh
                u, r, n = u_all[t], r_all[t], n_all[t]
                hn, hp = hn_all[t], h_prev[t]
                dn = gh * u
                da_n = dn * (1.0 - n * n)
                du = gh * (n - hp)
                da_u = du * u * (1.0 - u)
                dr = da_n * hn
                da_r = dr * r * (1.0 - r)
                dpre[t, :, :hid] = da_u
                dpre[t, :, hid : 2 * hid] = da_r
                dpre[t, :, 2 * hid :] = da_n
                dha[t, :, : 2 * hid] = dpre[t, :, : 2 * hid]
                dha[t, :, 2 * hid :] = da_n * r
                dh = gh * (1.0 - u) + dha[t] @ uh.T
            dpre_flat = dpre.reshape(steps * batch, 3 * hid)
            contribs = [(h0.node_id, dh)] if needs[h0.node_id] else []
            if needs[p.wx.node_id]:
                dwx = np.zeros_like(wx)
                if const is not None:
                    dwx[:dc] = const.reshape(steps * batch, dc).T @ dpre_flat
                if shared is not None:
                    dwx[dc : dc + ds] = shared.data.T @ dpre.sum(axis=0)
                if seq is not None:
                    dwx[dc + ds :] = seq.data.T @ dpre_flat
                if start is not None:
                    dwx[:d0] += np.outer(start.data, dpre[0].sum(axis=0))
                contribs.append((p.wx.node_id, dwx))
            if needs[p.bx.node_id]:
                contribs.append((p.bx.node_id, dpre_flat.sum(axis=0)))
            if needs[p.uh.node_id]:
                duh = h_prev.reshape(steps * batch, hid).T @ dha.reshape(
                    steps * batch, 3 * hid
                )
                contribs.append((p.uh.node_id, duh))
            if shared is not None and needs[shared.node_id]:
                contribs.append(
                    (shared.node_id, dpre.sum(axis=0) @ wx[dc : dc + ds].T)
                )
            if seq is not None and needs[seq.node_id]:
                contribs.append((seq.node_id, dpre_flat @ wx[dc + ds :].T))
            if start is not None and needs[start.node_id]:
                contribs.append((start.node_id, wx[:d0] @ dpre[0].sum(axis=0)))
            return contribs

        return vjp

    return h0.graph._append(
        "gru_sequence", tuple(inputs), out_all.reshape(steps * batch, hid), make_vjp
    )


def uniform_fan_in(rng: np.random.Generator, fan_in: int, *shape: int) -> np.ndarray:
    """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_gru(rng: np.random.Generator, in_dim: int, hidden: int) -> dict[str, np.ndarray]:
    """Fresh GRU parameter arrays, fan-in uniform weights and zero biases."""
    return {
        "wx": uniform_fan_in(rng, in_dim, in_dim, 3 * hidden),
        "bx": np.zeros(3 * hidden),
        "uh": uniform_fan_in(rng, hidden, hidden, 3 * hidden),
    }


# ---------------------------------------------------------------------------
# Finite-difference gradient checking


@dataclass
class GradCheckReport:
    """Per-leaf maximum relative error of analytic vs numeric gradients."""

    errors: dict[str, float]
    eps: float
    tol: float

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def passed(self) -> bool:
        return all(e <= self.tol for e in self.errors.values())

    def __str__(self) -> str:
        lines = [
            f"  {name}: max rel err {err:.3e}  "
            f"{'ok' if err <= self.tol else 'FAIL'}"
            for name, err in sorted(self.errors.items())
        ]
        status = "PASS" if self.passed else "FAIL"
        lines.append(f"  => {status} (tol {self.tol:g}, eps {self.eps:g})")
        return "\n".join(lines)


def grad_check(
    f,
    leaves: dict[str, np.ndarray],
    eps: float = 1e-5,
    tol: float = 1e-5,
    sample: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic gradients of ``f`` against central finite differences.

    ``f(graph, tensors)`` must build a scalar loss from the named leaf
    tensors and be deterministic; determinism is verified by building the
    graph twice and requiring bit-identical loss values. ``sample`` limits
    the check to that many elements per leaf (chosen by a seeded rng);
    ``None`` checks every element.

    The relative error per element is |analytic - numeric| divided by
    max(|analytic|, |numeric|, 1e-8).
    """
    if eps <= 0:
        raise ValueError("grad_check: eps must be positive")
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in leaves.items()}

    def run(arrs):
        g = Graph()
        ts = {k: g.leaf(v) for k, v in arrs.items()}
        out = f(g, ts)
        if out.data.shape != ():
            raise GraphError("grad_check: f must produce a scalar loss")
        return g, ts, out

    g1, ts1, out1 = run(arrays)
    _, _, out2 = run(arrays)
    if not np.array_equal(out1.data, out2.data):
        raise ValueError(
            "grad_check: f is non-deterministic (forward passes disagree)"
        )
    g1.backward(out1)

    pick = np.random.default_rng(seed)
    errors: dict[str, float] = {}
    for name, base in arrays.items():
        analytic = ts1[name].grad
        if analytic is None:
            analytic = np.zeros_like(base)
        flat_ids = np.arange(base.size)
        if sample is not None and sample < base.size:
            flat_ids = np.sort(pick.choice(base.size, size=sample, replace=False))
        worst = 0.0
        for idx in flat_ids:
            plus = dict(arrays)
            minus = dict(arrays)
            pa = base.copy().reshape(-1)
            pa[idx] += eps
            plus[name] = pa.reshape(base.shape)
            ma = base.copy().reshape(-1)
            ma[idx] -= eps
            minus[name] = ma.reshape(base.shape)
            _, _, up = run(plus)
            _, _, dn = run(minus)
            numeric = (float(up.data) - float(dn.data)) / (2.0 * eps)
            a = float(analytic.reshape(-1)[idx])
            denom = max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, abs(a - numeric) / denom)
        errors[name] = worst
    return GradCheckReport(errors=errors, eps=eps, tol=tol)
