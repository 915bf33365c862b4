"""Scalar computation-graph engine with reverse sweeps and in-graph tangents.

Every recorded operation also records its forward-mode tangent as ordinary
graph nodes. A single reverse sweep from a loss that mixes primal values and
tangents (e.g. ``d net / dt``) therefore yields mixed second derivatives
with respect to the leaves.

Example
-------
>>> tape = Tape()
>>> w = tape.leaf(0.0, 0.0)
>>> t = tape.leaf(5.0, 1.0)
>>> f = tanh(w * t)
>>> tape.backward(f)[w.index], tape.backward(f)[t.index]
(5.0, 0.0)
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NonFiniteError, SingularDivisionError

__all__ = ["Tape", "TapeVar", "leaf", "apply", "backward", "tanh", "exp", "square"]

KINDS = ("add", "sub", "mul", "div", "tanh", "exp", "square", "scale")

_LEAF = "leaf"
_CONST = "const"


class TapeVar:
    """Handle to one node of a :class:`Tape`."""

    __slots__ = ("tape", "index")

    def __init__(self, tape, index):
        self.tape = tape
        self.index = index

    @property
    def value(self):
        return self.tape.values[self.index]

    @property
    def tangent(self):
        """Tangent of this node as a TapeVar (a zero constant if none)."""
        k = self.tape.tangents[self.index]
        if k is None:
            return self.tape.const(0.0)
        return TapeVar(self.tape, k)

    @property
    def tangent_value(self):
        k = self.tape.tangents[self.index]
        return 0.0 if k is None else self.tape.values[k]

    def __repr__(self):
        return f"TapeVar(index={self.index}, value={self.value!r})"

    def _lift(self, other):
        if isinstance(other, TapeVar):
            return other
        return self.tape.const(float(other))

    def __add__(self, other):
        return self.tape.apply("add", self, self._lift(other))

    def __radd__(self, other):
        return self.tape.apply("add", self._lift(other), self)

    def __sub__(self, other):
        return self.tape.apply("sub", self, self._lift(other))

    def __rsub__(self, other):
        return self.tape.apply("sub", self._lift(other), self)

    def __mul__(self, other):
        if isinstance(other, TapeVar):
            return self.tape.apply("mul", self, other)
        return self.tape.apply("scale", self, constant=float(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, TapeVar):
            return self.tape.apply("div", self, other)
        other = float(other)
        if other == 0.0:
            raise SingularDivisionError("singular division")
        return self.tape.apply("scale", self, constant=1.0 / other)

    def __rtruediv__(self, other):
        return self.tape.apply("div", self._lift(other), self)

    def __neg__(self):
        return self.tape.apply("scale", self, constant=-1.0)

    def __pos__(self):
        return self


class Tape:
    """Append-only record of scalar operations.

    Nodes are stored in parallel lists; node ``k`` only references parents
    with index ``< k``. ``tangents[k]`` is the index of the node holding the
    forward tangent of node ``k``, or ``None`` when that tangent is zero.
    """

    def __init__(self):
        self.kinds = []
        self.parents = []
        self.partials = []
        self.values = []
        self.tangents = []
        self.leaves = []
        self._zero = None

    def __len__(self):
        return len(self.values)

    def _record(self, kind, parents, partials, value, tangent=None):
        self.kinds.append(kind)
        self.parents.append(parents)
        self.partials.append(partials)
        self.values.append(value)
        self.tangents.append(tangent)
        return len(self.values) - 1

    def _check(self, var):
        if not isinstance(var, TapeVar):
            raise TypeError(f"expected TapeVar, got {type(var).__name__}")
        if var.tape is not self:
            raise ValueError("TapeVar belongs to a different tape")

    def const(self, value):
        """Record a constant: a node without parents that is not a leaf."""
        if value == 0.0:
            if self._zero is None:
                self._zero = self._record(_CONST, (), (), 0.0)
            return TapeVar(self, self._zero)
        return TapeVar(self, self._record(_CONST, (), (), float(value)))

    def leaf(self, value, tangent=0.0):
        """Record an input node with primal ``value`` and tangent seed ``tangent``."""
        value = float(value)
        if not math.isfinite(value):
            raise NonFiniteError("non-finite leaf")
        seed = self._record(_CONST, (), (), float(tangent))
        idx = self._record(_LEAF, (), (), value, None if tangent == 0.0 else seed)
        self.leaves.append(idx)
        return TapeVar(self, idx)

    # -- raw ops: primal + local partials, no tangent bookkeeping ------------

    def _raw(self, kind, a, b=None, constant=None):
        va = self.values[a]
        if kind == "add":
            return self._record(kind, (a, b), (1.0, 1.0), va + self.values[b])
        if kind == "sub":
            return self._record(kind, (a, b), (1.0, -1.0), va - self.values[b])
        if kind == "mul":
            vb = self.values[b]
            return self._record(kind, (a, b), (vb, va), va * vb)
        if kind == "div":
            vb = self.values[b]
            if vb == 0.0:
                raise SingularDivisionError("singular division")
            z = va / vb
            return self._record(kind, (a, b), (1.0 / vb, -z / vb), z)
        if kind == "tanh":
            z = math.tanh(va)
            return self._record(kind, (a,), (1.0 - z * z,), z)
        if kind == "exp":
            try:
                z = math.exp(va)
            except OverflowError:
                z = math.inf
            return self._record(kind, (a,), (z,), z)
        if kind == "square":
            return self._record(kind, (a,), (2.0 * va,), va * va)
        if kind == "scale":
            return self._record(kind, (a,), (constant,), constant * va)
        raise ValueError(f"unknown operation kind {kind!r}")

    def _sum(self, terms):
        terms = [t for t in terms if t is not None]
        if not terms:
            return None
        acc = terms[0]
        for t in terms[1:]:
            acc = self._raw("add", acc, t)
        return acc

    def _tangent_of(self, kind, out, a, b, constant):
        da = self.tangents[a]
        db = self.tangents[b] if b is not None else None
        if da is None and db is None:
            return None
        if kind == "add":
            return self._sum([da, db])
        if kind == "sub":
            if db is None:
                return da
            neg = self._raw("scale", db, constant=-1.0)
            return neg if da is None else self._raw("sub", da, db)
        if kind == "mul":
            return self._sum([
                self._raw("mul", da, b) if da is not None else None,
                self._raw("mul", a, db) if db is not None else None,
            ])
        if kind == "div":
            # d(a/b) = (da - z*db) / b
            num = da
            if db is not None:
                zdb = self._raw("mul", out, db)
                num = self._raw("scale", zdb, constant=-1.0) if num is None else self._raw("sub", num, zdb)
            return self._raw("div", num, b)
        if kind == "tanh":
            one = self.const(1.0).index
            sech2 = self._raw("sub", one, self._raw("square", out))
            return self._raw("mul", da, sech2)
        if kind == "exp":
            return self._raw("mul", out, da)
        if kind == "square":
            return self._raw("scale", self._raw("mul", a, da), constant=2.0)
        if kind == "scale":
            return self._raw("scale", da, constant=constant)
        raise ValueError(f"unknown operation kind {kind!r}")

    def apply(self, kind, *args, constant=None):
        """Record ``kind`` applied to ``args`` together with its tangent nodes."""
        if kind not in KINDS:
            raise ValueError(f"unknown operation kind {kind!r}")
        arity = 2 if kind in ("add", "sub", "mul", "div") else 1
        if len(args) != arity:
            raise TypeError(f"{kind} takes {arity} argument(s), got {len(args)}")
        for arg in args:
            self._check(arg)
        if kind == "scale":
            if constant is None:
                raise TypeError("scale requires a constant")
            constant = float(constant)
        a = args[0].index
        b = args[1].index if arity == 2 else None
        out = self._raw(kind, a, b, constant)
        self.tangents[out] = self._tangent_of(kind, out, a, b, constant)
        return TapeVar(self, out)

    def backward(self, output):
        """Reverse sweep from ``output``; returns ``{leaf index: adjoint}``.

        The tape itself is not modified, so the sweep can be repeated or run
        from a different output.
        """
        self._check(output)
        n = output.index + 1
        values = self.values
        bad = [k for k in range(n) if not math.isfinite(values[k])]
        if bad:
            raise NonFiniteError(f"non-finite primal value at node {bad[0]}")
        adj = [0.0] * n
        adj[output.index] = 1.0
        parents = self.parents
        partials = self.partials
        for k in range(output.index, -1, -1):
            g = adj[k]
            if g == 0.0:
                continue
            for p, d in zip(parents[k], partials[k]):
                adj[p] += g * d
        result = {}
        for k in self.leaves:
            if k >= n:
                break
            if not math.isfinite(adj[k]):
                raise NonFiniteError(f"non-finite adjoint at leaf {k}")
            result[k] = adj[k]
        return result

    def gradient(self, output, wrt):
        """Adjoints of ``output`` for the TapeVars in ``wrt``, as an array."""
        adj = self.backward(output)
        return np.array([adj.get(v.index, 0.0) for v in wrt])


def leaf(tape, value, tangent=0.0):
    return tape.leaf(value, tangent)


def apply(kind, *args, constant=None):
    if not args:
        raise TypeError("apply needs at least one argument")
    return args[0].tape.apply(kind, *args, constant=constant)


def backward(tape, output):
    return tape.backward(output)


def tanh(x):
    if isinstance(x, TapeVar):
        return x.tape.apply("tanh", x)
    if isinstance(x, np.ndarray):
        return np.tanh(x)
    return math.tanh(x)


def exp(x):
    if isinstance(x, TapeVar):
        return x.tape.apply("exp", x)
    if isinstance(x, np.ndarray):
        return np.exp(x)
    return math.exp(x)


def square(x):
    if isinstance(x, TapeVar):
        return x.tape.apply("square", x)
    return x * x
