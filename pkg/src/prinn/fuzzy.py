"""Possibility distributions: membership functions, triangular fuzzy numbers,
horizontal membership functions and fuzzy-graph restrictions.

All evaluators accept plain floats, numpy arrays or autodiff Vars, so the
same code computes report values and differentiable loss terms.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad

__all__ = [
    "TriangularFuzzyNumber",
    "Granule",
    "MembershipFunction",
    "Rule",
    "RuleSet",
    "membership",
    "hmf",
    "alpha_cut",
    "restriction",
    "tnorm",
    "snorm",
]


@dataclass(frozen=True)
class TriangularFuzzyNumber:
    """Fuzzy number ``(a, b, c)`` with core ``b`` and support ``[a, c]``."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        vals = (self.a, self.b, self.c)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"fuzzy triple {vals} has non-finite entries")
        if not (self.a <= self.b <= self.c):
            raise ValueError(f"fuzzy triple {vals} is not nondecreasing (need a <= b <= c)")

    @property
    def core(self) -> float:
        return self.b

    def as_membership(self) -> "MembershipFunction":
        return MembershipFunction.triangular(self.a, self.b, self.c)


@dataclass(frozen=True)
class Granule:
    """HMF coordinates: membership level ``mu`` and relative-distance measure ``alpha``."""

    mu: float
    alpha: float

    def __post_init__(self):
        for name in ("mu", "alpha"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"granule {name}={v} outside [0, 1]")


@dataclass(frozen=True)
class MembershipFunction:
    shape: str
    params: tuple

    SHAPES = {"triangular": 3, "trapezoidal": 4, "gaussian": 2}

    def __post_init__(self):
        n = self.SHAPES.get(self.shape)
        if n is None:
            raise ValueError(f"unknown membership shape {self.shape!r}")
        if len(self.params) != n:
            raise ValueError(f"{self.shape} takes {n} parameters, got {len(self.params)}")
        p = self.params
        if self.shape == "gaussian":
            if p[1] <= 0:
                raise ValueError("gaussian width must be positive")
        elif list(p) != sorted(p):
            raise ValueError(f"{self.shape}{tuple(p)} is not nondecreasing")

    @classmethod
    def triangular(cls, a, b, c):
        return cls("triangular", (float(a), float(b), float(c)))

    @classmethod
    def trapezoidal(cls, a, b, c, d):
        return cls("trapezoidal", (float(a), float(b), float(c), float(d)))

    @classmethod
    def gaussian(cls, center, width):
        return cls("gaussian", (float(center), float(width)))

    def __call__(self, x):
        return membership(self, x)

    @property
    def core(self) -> float:
        """A point of full membership."""
        if self.shape == "gaussian":
            return self.params[0]
        if self.shape == "triangular":
            return self.params[1]
        return 0.5 * (self.params[1] + self.params[2])

    def __str__(self):
        return f"{self.shape}({', '.join(repr(v) for v in self.params)})"


def _ramp_pieces(x, a, b, c, d):
    """Piecewise-linear trapezoid on half-open pieces (a,b], (b,c], (c,d].

    Using left-closed-right-open masks makes the slope at every kink the
    left derivative. Masks are constants, so the value stays linear in x
    on each piece.
    """
    v = ad.value_of(x)
    out = 0.0
    if b > a:
        rise = ((v > a) & (v <= b)).astype(float)
        out = out + rise * ((x - a) * (1.0 / (b - a)))
    plateau = ((v > b) & (v <= c)) if c > b else np.zeros(np.shape(v), dtype=bool)
    # a degenerate left shoulder (a == b) still has full membership at b
    core = plateau | (v == b) if b == a else plateau
    out = out + core.astype(float)
    if d > c:
        fall = ((v > c) & (v <= d)).astype(float)
        out = out + fall * ((d - x) * (1.0 / (d - c)))
    if isinstance(out, float):
        out = np.zeros(np.shape(v)) + out
    return out


def membership(f: MembershipFunction, x):
    """Membership degree of ``x`` in ``f``; values lie in [0, 1]."""
    p = f.params
    if f.shape == "gaussian":
        z = (x - p[0]) * (1.0 / p[1])
        return ad.exp(-0.5 * z * z)
    if f.shape == "triangular":
        a, b, c = p
        return _ramp_pieces(x, a, b, b, c)
    return _ramp_pieces(x, *p)


def alpha_cut(n: TriangularFuzzyNumber, mu: float) -> tuple[float, float]:
    """Interval of values with membership at least ``mu``."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"membership level {mu} outside [0, 1]")
    lo = (1.0 - mu) * n.a + mu * n.b
    hi = (1.0 - mu) * n.c + mu * n.b
    return lo, hi


def hmf(n: TriangularFuzzyNumber, mu, alpha=None):
    """Granule value of ``n`` at level ``mu`` and RDM coordinate ``alpha``.

    ``mu`` may be a :class:`Granule` (then ``alpha`` is omitted), floats, or
    autodiff Vars. At ``mu == 1`` the result is exactly the core ``b``; at
    ``mu == 0`` it sweeps the support ``[a, c]`` as ``alpha`` goes 0 -> 1.
    """
    if isinstance(mu, Granule):
        mu, alpha = mu.mu, mu.alpha
    elif alpha is None:
        raise TypeError("hmf needs alpha unless given a Granule")
    for name, v in (("mu", mu), ("alpha", alpha)):
        vv = ad.value_of(v)
        if np.any(vv < 0) or np.any(vv > 1):
            raise ValueError(f"{name} outside [0, 1]")
    # convex-combination form keeps the mu=1 and mu=0 endpoints exact
    lo = (1.0 - mu) * n.a + mu * n.b
    hi = (1.0 - mu) * n.c + mu * n.b
    return ad.minimum(lo + alpha * (hi - lo), hi)


def tnorm(kind: str, a, b):
    if kind == "min":
        return ad.minimum(a, b)
    if kind == "product":
        return a * b
    raise ValueError(f"unknown t-norm {kind!r}")


def snorm(kind: str, a, b):
    if kind == "max":
        return ad.maximum(a, b)
    if kind == "bounded-sum":
        return ad.minimum(a + b, 1.0)
    raise ValueError(f"unknown s-norm {kind!r}")


@dataclass(frozen=True)
class Rule:
    """``if x1 is A1 and ... then y is B``."""

    antecedents: tuple[MembershipFunction, ...]
    consequent: MembershipFunction

    def __str__(self):
        lhs = " & ".join(str(a) for a in self.antecedents)
        return f"{lhs} -> {self.consequent}"


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    tnorm: str = "min"
    snorm: str = "max"

    def __post_init__(self):
        if not self.rules:
            raise ValueError("a rule set needs at least one rule")
        arity = {len(r.antecedents) for r in self.rules}
        if len(arity) != 1:
            raise ValueError(f"rules disagree on input arity: {sorted(arity)}")
        if self.tnorm not in ("min", "product"):
            raise ValueError(f"unknown t-norm {self.tnorm!r}")
        if self.snorm not in ("max", "bounded-sum"):
            raise ValueError(f"unknown s-norm {self.snorm!r}")

    @property
    def arity(self) -> int:
        return len(self.rules[0].antecedents)

    @classmethod
    def from_pairs(cls, pairs, tnorm="min", snorm="max"):
        """Build from ``[(antecedent(s), consequent), ...]``."""
        rules = []
        for ante, cons in pairs:
            if isinstance(ante, MembershipFunction):
                ante = (ante,)
            rules.append(Rule(tuple(ante), cons))
        return cls(tuple(rules), tnorm, snorm)


def restriction(rs: RuleSet, inputs: Sequence, output):
    """Degree R in [0, 1] to which ``(inputs, output)`` satisfies the rule set."""
    if len(inputs) != rs.arity:
        raise ValueError(f"rule set expects {rs.arity} inputs, got {len(inputs)}")
    total = None
    for rule in rs.rules:
        act = None
        for mf, x in zip(rule.antecedents, inputs):
            m = membership(mf, x)
            act = m if act is None else tnorm(rs.tnorm, act, m)
        fired = tnorm(rs.tnorm, act, membership(rule.consequent, output))
        total = fired if total is None else snorm(rs.snorm, total, fired)
    return total
