"""Scalar computation graphs with forward evaluation and reverse-mode adjoints.

Nodes live on an append-only tape, so every child id is smaller than its
parent id and one forward (or reverse) sweep visits nodes in topological
order.  Input values may be Python floats or numpy arrays with a common
broadcast shape; arrays evaluate the same graph elementwise, which is how
batched losses and integration grids run without per-point Python overhead.

A ``Graph`` instance is single-writer during ``eval``/``backward``; distinct
instances can be used from distinct threads concurrently.
"""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "Graph",
    "GraphError",
    "Node",
    "absolute",
    "clamp01",
    "eq_indicator",
    "exp",
    "leq_step",
    "log",
    "lt_step",
    "maximum",
    "minimum",
    "power",
    "sigmoid",
]


class GraphError(Exception):
    """Malformed graph, unbound input, or numeric domain violation."""


class Node:
    """Lightweight handle to one tape entry; supports arithmetic operators."""

    __slots__ = ("graph", "id")

    def __init__(self, graph: "Graph", node_id: int):
        self.graph = graph
        self.id = node_id

    def __repr__(self) -> str:
        return f"Node({self.id})"

    def __bool__(self) -> bool:
        raise TypeError("graph nodes have no truth value; build an explicit comparison instead")

    def __add__(self, other):
        return self.graph.add(self, other)

    def __radd__(self, other):
        return self.graph.add(other, self)

    def __sub__(self, other):
        return self.graph.sub(self, other)

    def __rsub__(self, other):
        return self.graph.sub(other, self)

    def __mul__(self, other):
        return self.graph.mul(self, other)

    def __rmul__(self, other):
        return self.graph.mul(other, self)

    def __truediv__(self, other):
        return self.graph.div(self, other)

    def __rtruediv__(self, other):
        return self.graph.div(other, self)

    def __neg__(self):
        return self.graph.neg(self)


_NO_CHILD = -1


class Graph:
    """Append-only tape of scalar operations."""

    def __init__(self):
        self._ops: list[str] = []
        self._left: list[int] = []
        self._right: list[int] = []
        self._payload: list = []  # const value or input name
        self._inputs: dict = {}  # input name -> node id
        self.values: list | None = None
        self.adjoints: list | None = None
        self._root: int | None = None

    def __len__(self) -> int:
        return len(self._ops)

    @property
    def input_names(self) -> tuple:
        return tuple(self._inputs)

    # -- construction -------------------------------------------------------

    def _push(self, op: str, left: int = _NO_CHILD, right: int = _NO_CHILD, payload=None) -> Node:
        self._ops.append(op)
        self._left.append(left)
        self._right.append(right)
        self._payload.append(payload)
        return Node(self, len(self._ops) - 1)

    def _coerce(self, value) -> Node:
        if isinstance(value, Node):
            if value.graph is not self:
                raise GraphError("cannot mix nodes from different graphs")
            return value
        return self.const(float(value))

    def const(self, value: float) -> Node:
        return self._push("const", payload=float(value))

    def input(self, name) -> Node:
        if name in self._inputs:
            raise GraphError(f"duplicate input name {name!r}")
        node = self._push("input", payload=name)
        self._inputs[name] = node.id
        return node

    def _binary(self, op: str, a, b) -> Node:
        a = self._coerce(a)
        b = self._coerce(b)
        return self._push(op, a.id, b.id)

    def _unary(self, op: str, a) -> Node:
        a = self._coerce(a)
        return self._push(op, a.id)

    def add(self, a, b) -> Node:
        return self._binary("add", a, b)

    def sub(self, a, b) -> Node:
        return self._binary("sub", a, b)

    def mul(self, a, b) -> Node:
        return self._binary("mul", a, b)

    def div(self, a, b) -> Node:
        return self._binary("div", a, b)

    def neg(self, a) -> Node:
        return self._unary("neg", a)

    def minimum(self, a, b) -> Node:
        return self._binary("min", a, b)

    def maximum(self, a, b) -> Node:
        return self._binary("max", a, b)

    def absolute(self, a) -> Node:
        return self._unary("abs", a)

    def exp(self, a) -> Node:
        return self._unary("exp", a)

    def log(self, a) -> Node:
        return self._unary("ln", a)

    def power(self, a, b) -> Node:
        return self._binary("pow", a, b)

    def sigmoid(self, a) -> Node:
        return self._unary("sigmoid", a)

    def clamp01(self, a) -> Node:
        return self._unary("clamp01", a)

    def eq_indicator(self, a, b) -> Node:
        return self._binary("indicator-eq", a, b)

    # -- evaluation ---------------------------------------------------------

    def eval(self, inputs: Mapping, root: Node | None = None):
        """Forward-evaluate the tape and return the root value.

        ``inputs`` maps every input name to a float or numpy array.  The root
        defaults to the most recently appended node.  Raises ``GraphError``
        for unbound inputs and for ``ln``/``div``/``pow`` domain violations,
        naming the offending node id.
        """
        n = len(self._ops)
        if n == 0:
            raise GraphError("empty graph")
        root_id = (n - 1) if root is None else self._coerce(root).id
        values: list = [None] * n
        for i in range(n):
            op = self._ops[i]
            if op == "const":
                values[i] = self._payload[i]
                continue
            if op == "input":
                name = self._payload[i]
                if name not in inputs:
                    raise GraphError(f"unbound input {name!r} at node {i}")
                v = inputs[name]
                values[i] = float(v) if np.ndim(v) == 0 else np.asarray(v, dtype=float)
                continue
            a = values[self._left[i]]
            if op == "neg":
                values[i] = -a
            elif op == "abs":
                values[i] = np.abs(a)
            elif op == "exp":
                values[i] = np.exp(a)
            elif op == "ln":
                if np.any(np.asarray(a) <= 0.0):
                    raise GraphError(f"ln of non-positive value at node {i}")
                values[i] = np.log(a)
            elif op == "sigmoid":
                with np.errstate(over="ignore"):
                    values[i] = 1.0 / (1.0 + np.exp(-a))
            elif op == "clamp01":
                values[i] = np.clip(a, 0.0, 1.0)
            else:
                b = values[self._right[i]]
                if op == "add":
                    values[i] = a + b
                elif op == "sub":
                    values[i] = a - b
                elif op == "mul":
                    values[i] = a * b
                elif op == "div":
                    if np.any(np.asarray(b) == 0.0):
                        raise GraphError(f"division by zero at node {i}")
                    values[i] = a / b
                elif op == "min":
                    values[i] = np.minimum(a, b)
                elif op == "max":
                    values[i] = np.maximum(a, b)
                elif op == "pow":
                    with np.errstate(invalid="ignore", divide="ignore"):
                        out = np.power(a, b)
                    if np.any(~np.isfinite(np.asarray(out))):
                        raise GraphError(f"invalid power at node {i}")
                    values[i] = out
                elif op == "indicator-eq":
                    values[i] = np.where(np.asarray(a) == np.asarray(b), 1.0, 0.0)
                else:  # pragma: no cover
                    raise GraphError(f"unknown op {op!r} at node {i}")
        self.values = values
        self._root = root_id
        self.adjoints = None
        out = values[root_id]
        if np.ndim(out) == 0:
            return float(out)
        return out

    def backward(self) -> dict:
        """Reverse-accumulate adjoints from the last evaluated root.

        Returns a map ``input name -> gradient``.  Subgradient conventions at
        kinks: ``min``/``max`` send the full gradient to the first argument on
        ties, ``abs`` uses ``+1`` at zero, ``clamp01`` keeps slope 1 on the
        closed interval [0, 1], and the equality indicator has zero derivative
        everywhere.  ``pow`` gradients are zero where the base is zero.
        """
        if self.values is None or self._root is None:
            raise GraphError("backward requires a prior eval")
        n = len(self._ops)
        values = self.values
        adj: list = [0.0] * n
        adj[self._root] = np.ones_like(values[self._root], dtype=float) if np.ndim(values[self._root]) else 1.0
        for i in range(n - 1, -1, -1):
            g = adj[i]
            if np.all(np.asarray(g) == 0.0):
                continue
            op = self._ops[i]
            if op in ("const", "input"):
                continue
            li = self._left[i]
            a = values[li]
            if op == "neg":
                adj[li] = adj[li] - g
            elif op == "abs":
                adj[li] = adj[li] + g * np.where(np.asarray(a) >= 0.0, 1.0, -1.0)
            elif op == "exp":
                adj[li] = adj[li] + g * values[i]
            elif op == "ln":
                adj[li] = adj[li] + g / a
            elif op == "sigmoid":
                adj[li] = adj[li] + g * values[i] * (1.0 - values[i])
            elif op == "clamp01":
                inside = (np.asarray(a) >= 0.0) & (np.asarray(a) <= 1.0)
                adj[li] = adj[li] + g * np.where(inside, 1.0, 0.0)
            else:
                ri = self._right[i]
                b = values[ri]
                if op == "add":
                    adj[li] = adj[li] + g
                    adj[ri] = adj[ri] + g
                elif op == "sub":
                    adj[li] = adj[li] + g
                    adj[ri] = adj[ri] - g
                elif op == "mul":
                    adj[li] = adj[li] + g * b
                    adj[ri] = adj[ri] + g * a
                elif op == "div":
                    adj[li] = adj[li] + g / b
                    adj[ri] = adj[ri] - g * a / (b * b)
                elif op == "min":
                    take_a = np.asarray(a) <= np.asarray(b)
                    adj[li] = adj[li] + g * np.where(take_a, 1.0, 0.0)
                    adj[ri] = adj[ri] + g * np.where(take_a, 0.0, 1.0)
                elif op == "max":
                    take_a = np.asarray(a) >= np.asarray(b)
                    adj[li] = adj[li] + g * np.where(take_a, 1.0, 0.0)
                    adj[ri] = adj[ri] + g * np.where(take_a, 0.0, 1.0)
                elif op == "pow":
                    pos = np.asarray(a) > 0.0
                    base = np.where(pos, a, 1.0)
                    adj[li] = adj[li] + g * np.where(pos, b * np.power(base, np.asarray(b) - 1.0), 0.0)
                    adj[ri] = adj[ri] + g * np.where(pos, values[i] * np.log(base), 0.0)
                elif op == "indicator-eq":
                    pass
        self.adjoints = adj
        grads = {}
        for name, node_id in self._inputs.items():
            g = adj[node_id]
            grads[name] = float(g) if np.ndim(g) == 0 else g
        return grads

    def finite_diff(self, inputs: Mapping, h: float = 1e-6) -> dict:
        """Central-difference gradients ``(f(x+h) - f(x-h)) / 2h`` per input.

        Array-valued inputs are perturbed wholesale, which under the batched
        interpretation (one independent sample per lane) yields the per-sample
        derivative of that input.  Leaves the graph re-evaluated at the
        original inputs.
        """
        if h <= 0.0:
            raise GraphError("finite_diff step must be positive")
        grads = {}
        for name in self._inputs:
            bumped = dict(inputs)
            bumped[name] = inputs[name] + h
            f_plus = self.eval(bumped)
            bumped[name] = inputs[name] - h
            f_minus = self.eval(bumped)
            grads[name] = (f_plus - f_minus) / (2.0 * h)
        self.eval(inputs)
        return grads

    def dump(self) -> str:
        """Line-oriented debug listing: ``id op child-ids value adjoint``."""
        lines = []
        for i, op in enumerate(self._ops):
            if op == "const":
                label = f"const:{self._payload[i]!r}"
            elif op == "input":
                label = f"input:{self._payload[i]!r}"
            else:
                label = op
            children = [c for c in (self._left[i], self._right[i]) if c != _NO_CHILD]
            child_s = ",".join(str(c) for c in children) if children else "-"
            value_s = _fmt_slot(self.values[i]) if self.values is not None else "-"
            adj_s = _fmt_slot(self.adjoints[i]) if self.adjoints is not None else "-"
            lines.append(f"{i} {label} {child_s} {value_s} {adj_s}")
        return "\n".join(lines)


def _fmt_slot(v) -> str:
    if v is None:
        return "-"
    if np.ndim(v) == 0:
        return repr(float(v))
    return f"array{np.shape(v)}"


# -- dual numeric/graph helpers ---------------------------------------------
#
# The operator formulas in logics.py are written once against these helpers:
# with Node arguments they extend the tape, with floats or numpy arrays they
# compute the value directly.  Both paths share the same branch conventions.


def _graph_for(*args) -> Graph | None:
    for a in args:
        if isinstance(a, Node):
            return a.graph
    return None


def minimum(a, b):
    g = _graph_for(a, b)
    if g is not None:
        return g.minimum(a, b)
    return np.minimum(a, b)


def maximum(a, b):
    g = _graph_for(a, b)
    if g is not None:
        return g.maximum(a, b)
    return np.maximum(a, b)


def absolute(a):
    if isinstance(a, Node):
        return a.graph.absolute(a)
    return np.abs(a)


def exp(a):
    if isinstance(a, Node):
        return a.graph.exp(a)
    return np.exp(a)


def log(a):
    if isinstance(a, Node):
        return a.graph.log(a)
    return np.log(a)


def power(a, b):
    g = _graph_for(a, b)
    if g is not None:
        return g.power(a, b)
    return np.power(a, b)


def sigmoid(a):
    if isinstance(a, Node):
        return a.graph.sigmoid(a)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-a))


def clamp01(a):
    if isinstance(a, Node):
        return a.graph.clamp01(a)
    return np.clip(a, 0.0, 1.0)


def eq_indicator(a, b):
    g = _graph_for(a, b)
    if g is not None:
        return g.eq_indicator(a, b)
    return np.where(np.asarray(a) == np.asarray(b), 1.0, 0.0)


def leq_step(a, b):
    """Zero-derivative step: 1 where a <= b, else 0.

    On the graph this is encoded as ``[min(a, b) == a]``, which is exact in
    floating point and keeps the indicator's derivative-free convention.
    """
    g = _graph_for(a, b)
    if g is not None:
        a = g._coerce(a)
        return g.eq_indicator(g.minimum(a, b), a)
    return np.where(np.asarray(a) <= np.asarray(b), 1.0, 0.0)


def lt_step(a, b):
    """Zero-derivative step: 1 where a < b, else 0."""
    g = _graph_for(a, b)
    if g is not None:
        return g.sub(1.0, leq_step(b, a))
    return np.where(np.asarray(a) < np.asarray(b), 1.0, 0.0)
