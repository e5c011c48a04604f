"""Reverse-mode automatic differentiation on an append-only tape.

Every recorded node holds a numpy value (a 0-d array for plain scalars,
or an array when a whole collocation batch is pushed through at once) and
a closure that maps an output adjoint to input adjoints. The closures are
written with the same operator set as the forward pass, so running the
backward sweep with ``create_graph=True`` records the derivative itself on
the tape and it can be differentiated again.

Constants (floats, numpy arrays) never live on a tape. Mixing two tapes in
one operation is an error.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Tape",
    "Var",
    "DomainError",
    "TapeMismatchError",
    "record",
    "grad",
    "gradient",
    "derivative_of_derivative",
    "exp",
    "log",
    "tanh",
    "sin",
    "cos",
    "sigmoid",
    "minimum",
    "maximum",
    "absolute",
    "matmul",
    "transpose",
    "sum_to",
    "broadcast_to",
    "total",
    "mean",
    "take",
    "value_of",
]


class DomainError(ValueError):
    """An elementary operation was applied outside its domain."""


class TapeMismatchError(ValueError):
    """Operands (or gradient targets) belong to different tapes."""


class Tape:
    """Append-only list of nodes in topological order.

    A tape has a single writer. Node ``i`` only ever references parents with
    indices ``< i``, so a reverse sweep over indices visits every node once.
    """

    def __init__(self):
        self.kinds: list[str] = []
        self.parents: list[tuple[int, ...]] = []
        self.values: list[np.ndarray] = []
        self._backward: list[Callable | None] = []
        self.consts: list[tuple | None] = []

    def __len__(self):
        return len(self.values)

    def leaf(self, value, name: str = "leaf") -> "Var":
        arr = np.array(value, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise DomainError(f"{name}: non-finite value {value!r}")
        return self._push(name, (), arr, None)

    def _push(self, kind, parents, value, backward, consts=None) -> "Var":
        idx = len(self.values)
        self.consts.append(consts)
        self.kinds.append(kind)
        self.parents.append(parents)
        self.values.append(value)
        self._backward.append(backward)
        return Var(self, idx, value)


class Var:
    """A differentiable value living on a :class:`Tape`."""

    __slots__ = ("tape", "index", "value")
    __array_priority__ = 100.0

    def __init__(self, tape: Tape, index: int, value: np.ndarray):
        self.tape = tape
        self.index = index
        self.value = value

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def __float__(self):
        return float(self.value)

    def __repr__(self):
        return f"Var({self.value!r}, node={self.index})"

    def __add__(self, other):
        return _add(self, other)

    def __radd__(self, other):
        return _add(other, self)

    def __sub__(self, other):
        return _sub(self, other)

    def __rsub__(self, other):
        return _sub(other, self)

    def __mul__(self, other):
        return _mul(self, other)

    def __rmul__(self, other):
        return _mul(other, self)

    def __truediv__(self, other):
        return _div(self, other)

    def __rtruediv__(self, other):
        return _div(other, self)

    def __neg__(self):
        return _mul(self, -1.0)

    def __pow__(self, other):
        return _pow(self, other)

    def __rpow__(self, other):
        return _pow(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    @property
    def T(self):
        return transpose(self)


# ---------------------------------------------------------------- helpers

def value_of(x) -> np.ndarray:
    """Numeric value of a Var or constant."""
    if isinstance(x, Var):
        return x.value
    return np.asarray(x, dtype=float)


def _tape_of(*args) -> Tape | None:
    tape = None
    for a in args:
        if isinstance(a, Var):
            if tape is None:
                tape = a.tape
            elif a.tape is not tape:
                raise TapeMismatchError("operands live on different tapes")
    return tape


def _emit(kind, args, value, backward):
    """Record a node if any argument is a Var, else return the plain value."""
    tape = _tape_of(*args)
    value = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{kind}: produced a non-finite value")
    if tape is None:
        return value
    parents = tuple(a.index if isinstance(a, Var) else -1 for a in args)
    consts = None
    if -1 in parents:
        consts = tuple(None if isinstance(a, Var) else np.asarray(a, dtype=float) for a in args)
    return tape._push(kind, parents, value, backward, consts)


def _unbroadcast(g, shape):
    if np.shape(value_of(g)) == tuple(shape):
        return g
    return sum_to(g, shape)


# ------------------------------------------------------------ binary ops

def _add(a, b):
    sa, sb = np.shape(value_of(a)), np.shape(value_of(b))
    return _emit("add", (a, b), value_of(a) + value_of(b),
                 lambda g, ins, out: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def _sub(a, b):
    sa, sb = np.shape(value_of(a)), np.shape(value_of(b))
    return _emit("sub", (a, b), value_of(a) - value_of(b),
                 lambda g, ins, out: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def _mul(a, b):
    sa, sb = np.shape(value_of(a)), np.shape(value_of(b))

    va_, vb_ = isinstance(a, Var), isinstance(b, Var)

    def back(g, ins, out):
        x, y = ins
        return (_unbroadcast(g * y, sa) if va_ else None,
                _unbroadcast(g * x, sb) if vb_ else None)

    return _emit("mul", (a, b), value_of(a) * value_of(b), back)


def _div(a, b):
    vb = value_of(b)
    if np.any(vb == 0):
        raise DomainError("div: division by zero")
    sa, sb = np.shape(value_of(a)), np.shape(vb)

    va_, vb_ = isinstance(a, Var), isinstance(b, Var)

    def back(g, ins, out):
        x, y = ins
        return (_unbroadcast(g / y, sa) if va_ else None,
                _unbroadcast(-g * out / y, sb) if vb_ else None)

    return _emit("div", (a, b), value_of(a) / vb, back)


def _pow(a, b):
    va, vb = value_of(a), value_of(b)
    b_is_var = isinstance(b, Var)
    if b_is_var and np.any(va <= 0):
        raise DomainError("pow: base must be positive when the exponent is differentiable")
    with np.errstate(all="ignore"):
        val = np.power(va, vb)
    if not np.all(np.isfinite(val)):
        raise DomainError(f"pow: undefined for base {va!r} and exponent {vb!r}")
    sa, sb = np.shape(va), np.shape(vb)

    def back(g, ins, out):
        x, y = ins
        ga = _unbroadcast(g * y * x ** (y - 1.0), sa) if isinstance(a, Var) else None
        gb = _unbroadcast(g * out * log(x), sb) if b_is_var else None
        return ga, gb

    return _emit("pow", (a, b), val, back)


def minimum(a, b):
    """Elementwise min; on ties the gradient goes to the first argument."""
    va, vb = value_of(a), value_of(b)
    pick_a = va <= vb
    sa, sb = np.shape(va), np.shape(vb)
    ma = pick_a.astype(float)

    def back(g, ins, out):
        return _unbroadcast(g * ma, sa), _unbroadcast(g * (1.0 - ma), sb)

    return _emit("min", (a, b), np.where(pick_a, va, vb), back)


def maximum(a, b):
    """Elementwise max; on ties the gradient goes to the first argument."""
    va, vb = value_of(a), value_of(b)
    pick_a = va >= vb
    sa, sb = np.shape(va), np.shape(vb)
    ma = pick_a.astype(float)

    def back(g, ins, out):
        return _unbroadcast(g * ma, sa), _unbroadcast(g * (1.0 - ma), sb)

    return _emit("max", (a, b), np.where(pick_a, va, vb), back)


# ------------------------------------------------------------- unary ops

def exp(x):
    # overflow surfaces as a DomainError from _emit, not a numpy warning
    with np.errstate(over="ignore"):
        v = np.exp(value_of(x))
    return _emit("exp", (x,), v, lambda g, ins, out: (g * out,))


def log(x):
    v = value_of(x)
    if np.any(v <= 0):
        raise DomainError("ln: argument must be positive")
    return _emit("ln", (x,), np.log(v), lambda g, ins, out: (g / ins[0],))


def tanh(x):
    return _emit("tanh", (x,), np.tanh(value_of(x)),
                 lambda g, ins, out: (g * (1.0 - out * out),))


def sin(x):
    return _emit("sin", (x,), np.sin(value_of(x)), lambda g, ins, out: (g * cos(ins[0]),))


def cos(x):
    # composed from sin so that every derivative order stays on the op set
    return sin(x + math.pi / 2)


def absolute(x):
    v = value_of(x)
    sign = np.sign(v)
    return _emit("abs", (x,), np.abs(v), lambda g, ins, out: (g * sign,))


def sigmoid(x):
    return 1.0 / (1.0 + exp(-x))


# ------------------------------------------------- shape / linear algebra

def matmul(a, b):
    def back(g, ins, out):
        x, y = ins
        return matmul(g, transpose(y)), matmul(transpose(x), g)

    return _emit("matmul", (a, b), value_of(a) @ value_of(b), back)


def transpose(x):
    return _emit("transpose", (x,), value_of(x).T, lambda g, ins, out: (transpose(g),))


def sum_to(x, shape):
    """Sum a broadcast array back down to ``shape`` (numpy broadcasting rules)."""
    v = value_of(x)
    shape = tuple(shape)
    lead = v.ndim - len(shape)
    axes = tuple(range(lead)) + tuple(
        i + lead for i, n in enumerate(shape) if n == 1 and v.shape[i + lead] != 1)
    out_val = v.sum(axis=axes, keepdims=True) if axes else v
    out_val = out_val.reshape(shape)
    src = v.shape
    return _emit("sum_to", (x,), out_val, lambda g, ins, out: (broadcast_to(g, src),))


def broadcast_to(x, shape):
    v = value_of(x)
    src = v.shape
    return _emit("broadcast", (x,), np.broadcast_to(v, shape).copy(),
                 lambda g, ins, out: (sum_to(g, src),))


def total(x):
    """Sum of all elements, as a 0-d value."""
    return sum_to(x, ())


def mean(x):
    n = value_of(x).size
    if n == 0:
        raise DomainError("mean: empty input")
    return total(x) * (1.0 / n)


def take(x, index):
    """Basic indexing ``x[index]``; the gradient scatters back."""
    v = value_of(x)
    src = v.shape

    def back(g, ins, out):
        return (_scatter(g, index, src),)

    return _emit("take", (x,), np.array(v[index], dtype=float), back)


def _scatter(g, index, shape):
    def fill(val):
        buf = np.zeros(shape)
        buf[index] = val
        return buf

    return _emit("scatter", (g,), fill(value_of(g)),
                 lambda gg, ins, out: (take(gg, index),))


# ------------------------------------------------------------ front door

_OPS = {
    "+": _add, "add": _add,
    "-": _sub, "sub": _sub,
    "*": _mul, "mul": _mul, "×": _mul,
    "/": _div, "div": _div, "÷": _div,
    "pow": _pow, "**": _pow,
    "exp": exp, "ln": log, "log": log,
    "tanh": tanh, "sin": sin,
    "min": minimum, "max": maximum, "abs": absolute,
}


def record(op: str, *args):
    """Apply the elementary function named ``op`` to ``args``."""
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown elementary operation {op!r}") from None
    return fn(*args)


def grad(output, inputs: Sequence[Var], seed=None, create_graph: bool = False) -> list:
    """Vector-Jacobian product of ``output`` against each of ``inputs``.

    ``seed`` defaults to ones shaped like the output, i.e. the gradient of
    ``sum(output)``. With ``create_graph`` the results are Vars recorded on
    the same tape; otherwise they are numpy arrays. Inputs the output does
    not depend on get zeros.
    """
    if not isinstance(output, Var):
        return [np.zeros_like(value_of(i)) if not create_graph else np.zeros_like(i.value)
                for i in inputs]
    tape = output.tape
    for i in inputs:
        if not isinstance(i, Var) or i.tape is not tape:
            raise TapeMismatchError("gradient requested for an input on a different tape")

    stop = output.index
    wanted = {i.index for i in inputs}
    lo = min(wanted) if wanted else stop + 1
    # forward mask: nodes that depend on at least one requested input
    live = {}
    parents = tape.parents
    for k in range(lo, stop + 1):
        if k in wanted or any(p in live for p in parents[k] if p >= lo):
            live[k] = True

    if seed is None:
        seed = np.ones_like(output.value)
    adj = {stop: seed}
    values = tape.values
    for k in range(stop, lo - 1, -1):
        g = adj.pop(k, None) if k not in wanted else adj.get(k)
        if g is None or k not in live:
            continue
        back = tape._backward[k]
        if back is None:
            continue
        pidx = parents[k]
        if create_graph:
            ins = tuple(Var(tape, p, values[p]) if p >= 0 else None for p in pidx)
            out = Var(tape, k, values[k])
        else:
            ins = tuple(values[p] if p >= 0 else None for p in pidx)
            out = values[k]
            g = value_of(g)
        if -1 in pidx:
            ins = tuple(c if p < 0 else v for p, v, c in zip(pidx, ins, tape.consts[k]))
        contribs = back(g, ins, out)
        for p, c in zip(pidx, contribs):
            if p < 0 or c is None or p not in live:
                continue
            adj[p] = c if p not in adj else adj[p] + c
    result = []
    for i in inputs:
        g = adj.get(i.index)
        if g is None:
            g = np.zeros_like(i.value)
        result.append(g if create_graph else np.asarray(value_of(g), dtype=float))
    return result


def gradient(output, inputs: Sequence[Var]) -> list[float]:
    """First derivatives of a scalar output, as plain floats."""
    return [float(np.sum(g)) if np.ndim(g) else float(g) for g in grad(output, inputs)]


def derivative_of_derivative(output: Var, input: Var):
    """Second derivative d²output/dinput², by differentiating the recorded first derivative.

    For batched inputs the output is assumed elementwise in the input, so the
    result is the per-element second derivative.
    """
    (d1,) = grad(output, [input], create_graph=True)
    (d2,) = grad(d1, [input])
    return float(d2) if np.ndim(d2) == 0 else d2
