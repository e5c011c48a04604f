"""Fully connected tanh network and sigmoid-bounded learnable parameters."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

__all__ = ["Mlp", "BoundMlp", "ConstrainedParam", "init", "forward", "param_value",
           "SNAPSHOT_VERSION", "snapshot_text", "load_snapshot"]

SNAPSHOT_VERSION = 1


@dataclass
class Mlp:
    """Weights as plain arrays; bind to a tape to evaluate differentiably.

    ``weights[k]`` has shape ``(widths[k], widths[k+1])``. Hidden layers use
    tanh, the output layer is affine.
    """

    widths: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def set_parameters(self, arrays):
        arrays = list(arrays)
        self.weights = [np.array(a, dtype=float) for a in arrays[0::2]]
        self.biases = [np.array(a, dtype=float) for a in arrays[1::2]]

    def bind(self, tape: ad.Tape) -> "BoundMlp":
        leaves = [tape.leaf(p, "param") for p in self.parameters()]
        return BoundMlp(self, leaves)

    def __call__(self, x):
        """Evaluate on plain arrays of shape ``(n, widths[0])``; no tape."""
        h = np.asarray(x, dtype=float)
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < last:
                h = np.tanh(h)
        return h

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def copy(self) -> "Mlp":
        return Mlp(list(self.widths), [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases])


@dataclass
class BoundMlp:
    net: Mlp
    params: list[ad.Var] = field(repr=False)

    def __call__(self, x):
        """``x`` is an ``(n, in)`` array or Var; returns an ``(n, out)`` Var."""
        h = x
        last = len(self.params) // 2 - 1
        for k in range(last + 1):
            h = ad.matmul(h, self.params[2 * k]) + self.params[2 * k + 1]
            if k < last:
                h = ad.tanh(h)
        return h


def init(widths, seed: int) -> Mlp:
    """Xavier-uniform weights and zero biases, deterministic in ``seed``."""
    widths = [int(w) for w in widths]
    if len(widths) < 2:
        raise ValueError("need at least input and output widths")
    if any(w <= 0 for w in widths):
        raise ValueError(f"layer widths must be positive: {widths}")
    rng = np.random.Generator(np.random.PCG64(seed))
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(widths, weights, biases)


def forward(net: BoundMlp, t):
    """Scalar-in/scalar-out convenience: evaluate a 1-input net at ``t``.

    ``t`` may be a 0-d Var or a column of collocation times ``(n, 1)``.
    """
    v = ad.value_of(t)
    if v.ndim == 0:
        x = ad.broadcast_to(t, (1, 1)) if isinstance(t, ad.Var) else v.reshape(1, 1)
        return ad.take(net(x), (0, 0))
    return net(t)


class ConstrainedParam:
    """Learnable real squashed into ``(lo, hi)`` by a sigmoid.

    With ``bounds=None`` the raw value is exposed unchanged.
    """

    def __init__(self, raw: float = 0.0, bounds: tuple[float, float] | None = (0.0, 1.0),
                 name: str = "param"):
        if bounds is not None and not bounds[0] < bounds[1]:
            raise ValueError(f"empty bounds {bounds}")
        self.raw = float(raw)
        self.bounds = bounds
        self.name = name

    @classmethod
    def from_value(cls, value: float, bounds=(0.0, 1.0), name="param"):
        """Choose ``raw`` so the exposed value starts at ``value``."""
        if bounds is None:
            return cls(value, None, name)
        lo, hi = bounds
        s = (value - lo) / (hi - lo)
        if not 0 < s < 1:
            raise ValueError(f"initial value {value} not strictly inside {bounds}")
        return cls(math.log(s / (1 - s)), bounds, name)

    def value(self, raw=None):
        """Exposed value for ``raw`` (defaults to the stored raw; may be a Var)."""
        raw = self.raw if raw is None else raw
        if self.bounds is None:
            return raw
        lo, hi = self.bounds
        v = lo + (hi - lo) * ad.sigmoid(raw)
        # sigmoid saturates to exactly 0/1 in float64 well before |raw| = 50
        inner_lo = np.nextafter(lo, hi)
        inner_hi = np.nextafter(hi, lo)
        return ad.maximum(ad.minimum(v, inner_hi), inner_lo)

    def __float__(self):
        return float(self.value())

    def __repr__(self):
        return f"ConstrainedParam({self.name}={float(self):.6g}, raw={self.raw:.6g})"


def param_value(p: ConstrainedParam, raw=None):
    return p.value(raw)


def snapshot_text(net: Mlp, extra: dict[str, float] | None = None) -> str:
    """Versioned CSV text: header rows, then one ``index,value`` row per weight.

    Values use ``repr`` so they round-trip bit for bit.
    """
    lines = [f"# prinn-snapshot,{SNAPSHOT_VERSION}",
             "widths," + ",".join(str(w) for w in net.widths)]
    for k, v in (extra or {}).items():
        lines.append(f"param,{k},{float(v)!r}")
    lines.append("index,value")
    for i, v in enumerate(net.flat()):
        lines.append(f"{i},{float(v)!r}")
    return "\n".join(lines) + "\n"


def load_snapshot(text: str) -> tuple[Mlp, dict[str, float]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split(",")
    if head[0] != "# prinn-snapshot" or int(head[1]) != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot header {lines[0]!r}")
    widths = [int(w) for w in lines[1].split(",")[1:]]
    extra = {}
    k = 2
    while lines[k].startswith("param,"):
        _, name, val = lines[k].split(",")
        extra[name] = float(val)
        k += 1
    if lines[k] != "index,value":
        raise ValueError("snapshot is missing the index,value header")
    flat = np.array([float(ln.split(",")[1]) for ln in lines[k + 1:]])
    net = init(widths, 0)
    arrays, pos = [], 0
    for p in net.parameters():
        arrays.append(flat[pos:pos + p.size].reshape(p.shape))
        pos += p.size
    if pos != flat.size:
        raise ValueError(f"snapshot holds {flat.size} values, widths need {pos}")
    net.set_parameters(arrays)
    return net, extra
