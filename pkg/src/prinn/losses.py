"""Loss algebra for perception-informed training.

Individual penalties (data, initial condition, ODE residual, granular
residual with possibility factor, sureness, fuzzy-rule restriction) and
the presets that wire them into a mode's total loss.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import autodiff as ad
from .fuzzy import RuleSet, TriangularFuzzyNumber, hmf, restriction
from .network import BoundMlp, ConstrainedParam
from .prob import Normal, affine_likelihood

__all__ = [
    "PRESETS",
    "Context",
    "LossTerm",
    "LossTermError",
    "EvalState",
    "CompositeLoss",
    "Problem",
    "Learnables",
    "data_loss",
    "ic_loss",
    "residual_loss",
    "residual_values",
    "possibility_factor",
    "granular_residual_loss",
    "sureness",
    "sureness_loss",
    "rule_loss",
    "derivative_rule_loss",
    "build_preset",
]

PRESETS = ("singular", "possibility", "probability", "sureness", "finn", "finn-derivative")


class Context:
    """Network output and its time derivatives on one set of points.

    ``net`` maps an ``(n, k)`` input to an ``(n, 1)`` output; it can be a
    bound network or any analytic stand-in written with autodiff ops.
    ``extra`` holds constant input columns appended after time.
    """

    def __init__(self, net, t, tape: ad.Tape | None = None, extra=None):
        if tape is None:
            tape = net.params[0].tape if isinstance(net, BoundMlp) else ad.Tape()
        self.net = net
        self.tape = tape
        t = np.asarray(t, dtype=float).reshape(-1, 1)
        self.t_values = t
        self.t = tape.leaf(t, "time")
        if extra is None:
            inputs = self.t
        else:
            extra = np.asarray(extra, dtype=float).reshape(len(t), -1)
            k = extra.shape[1]
            first = np.zeros((1, k + 1))
            first[0, 0] = 1.0
            rest = np.hstack([np.zeros((k, 1)), np.eye(k)])
            inputs = ad.matmul(self.t, first) + extra @ rest
        self.extra = extra
        self.x = net(inputs)
        self._dx = None
        self._d2x = None

    @property
    def dx(self):
        if self._dx is None:
            (self._dx,) = ad.grad(self.x, [self.t], create_graph=True)
        return self._dx

    @property
    def d2x(self):
        if self._d2x is None:
            (self._d2x,) = ad.grad(self.dx, [self.t], create_graph=True)
        return self._d2x

    def at(self, t, extra=None) -> "Context":
        return Context(self.net, t, self.tape, extra)


# ------------------------------------------------------------ elementary

def data_loss(predictions, observations):
    """Mean squared error between predictions and observations."""
    obs = np.asarray(observations, dtype=float).reshape(-1)
    n_pred = ad.value_of(predictions).size
    if obs.size == 0 or n_pred == 0:
        raise ValueError("data loss needs at least one observation")
    if n_pred != obs.size:
        raise ValueError(f"{n_pred} predictions vs {obs.size} observations")
    if isinstance(predictions, ad.Var):
        obs = obs.reshape(predictions.shape)
        diff = predictions - obs
    else:
        diff = np.asarray(predictions, dtype=float).reshape(-1) - obs
    return ad.mean(diff * diff)


def ic_loss(x0_hat, x0: float):
    """Squared deviation of the predicted initial value."""
    e = x0_hat - x0
    return ad.total(e * e) if np.ndim(ad.value_of(e)) else e * e


def residual_values(ctx: Context, f: Callable, params: Mapping, order: int = 1):
    """Pointwise ODE residual ``x^(order) - f(...)`` on the context's points.

    ``f(t, x, params)`` for first order, ``f(t, x, dx, params)`` for second.
    """
    if order == 1:
        return ctx.dx - f(ctx.t, ctx.x, params)
    if order == 2:
        return ctx.d2x - f(ctx.t, ctx.x, ctx.dx, params)
    raise ValueError(f"unsupported order {order}")


def _as_context(net, collocation):
    if isinstance(net, Context):
        return net
    coll = np.asarray(collocation, dtype=float)
    if coll.size == 0:
        raise ValueError("collocation set is empty")
    return Context(net, coll)


def residual_loss(net, f: Callable, params: Mapping, collocation=None, order: int = 1):
    """Mean squared ODE residual on the collocation points."""
    ctx = _as_context(net, collocation)
    g = residual_values(ctx, f, params, order)
    return ad.mean(g * g)


def possibility_factor(mu, M: float):
    """``M ** (1 - mu)``: 1 at full membership, M at zero membership."""
    if not M > 1:
        raise ValueError(f"possibility base M must exceed 1, got {M}")
    return M ** (1.0 - mu)


def granular_params(params: Mapping, fuzzy: Mapping[str, TriangularFuzzyNumber], mu, alphas):
    """Crisp params with each fuzzy one replaced by its HMF granule."""
    out = dict(params)
    for name, n in fuzzy.items():
        out[name] = hmf(n, mu, alphas[name])
    return out


def granular_residual_loss(net, f: Callable, params: Mapping,
                           fuzzy: Mapping[str, TriangularFuzzyNumber], mu, alphas: Mapping,
                           collocation=None, order: int = 1):
    """Residual loss with fuzzy parameters evaluated at granule ``(mu, alpha)``.

    The possibility factor is applied by the composite, not here.
    """
    return residual_loss(net, f, granular_params(params, fuzzy, mu, alphas), collocation, order)


def sureness(mu, likelihood):
    return mu * likelihood


def sureness_loss(s):
    d = 1.0 - s
    return d * d


def rule_loss(rs: RuleSet, inputs, output, M: float):
    """``M (1 - R)^2`` averaged over points when given arrays."""
    if M < 1:
        raise ValueError(f"rule penalty M must be >= 1, got {M}")
    r = restriction(rs, inputs, output)
    d = 1.0 - r
    return ad.mean(d * d) * M if np.ndim(ad.value_of(d)) else d * d * M


def derivative_rule_loss(rs: RuleSet, net, collocation=None, M: float = 5.0):
    """Rule loss with the network's time derivative as the rule output."""
    ctx = _as_context(net, collocation)
    return rule_loss(rs, [ctx.t], ctx.dx, M)


# ------------------------------------------------------------- composite

class LossTermError(ArithmeticError):
    """A loss term could not be evaluated (domain error or non-finite value)."""

    def __init__(self, term: str, cause: Exception):
        super().__init__(f"loss term {term!r}: {cause}")
        self.term = term


@dataclass
class LossTerm:
    name: str
    fn: Callable  # (EvalState) -> Var, nonnegative
    weight: float = 1.0

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError(f"term {self.name!r} has negative weight")


@dataclass
class CompositeLoss:
    terms: list[LossTerm]
    preset: str = "custom"

    def names(self) -> list[str]:
        return [t.name for t in self.terms]

    def evaluate(self, state) -> tuple[object, dict[str, object]]:
        """Return ``(total, {name: weight * value})``."""
        parts = {}
        total = 0.0
        for term in self.terms:
            if term.weight == 0:
                parts[term.name] = np.asarray(0.0)
                continue
            try:
                v = term.fn(state)
            except ad.DomainError as exc:
                raise LossTermError(term.name, exc) from exc
            if np.any(ad.value_of(v) < 0):
                raise ValueError(f"loss term {term.name!r} is negative")
            c = v * term.weight if term.weight != 1.0 else v
            parts[term.name] = c
            total = total + c
        return total, parts


# --------------------------------------------------------------- presets

@dataclass
class Problem:
    """An ODE (or rule-described) system with its imprecise ingredients.

    ``rhs`` follows :func:`residual_values`. ``fuzzy`` parameters are
    possibility-mode triples; ``random`` are probability-mode normals (a
    name in both is a Z-number style pair). ``x0`` may be a fuzzy triple.
    """

    order: int = 1
    rhs: Callable | None = None
    params: dict = field(default_factory=dict)
    fuzzy: dict = field(default_factory=dict)
    random: dict = field(default_factory=dict)
    t0: float = 0.0
    x0: float | TriangularFuzzyNumber | None = None
    dx0: float | None = None
    data_t: np.ndarray | None = None
    data_x: np.ndarray | None = None
    rules: RuleSet | None = None
    mc_samples: np.ndarray | None = None  # (K, n_random) for the probability preset

    @property
    def has_data(self) -> bool:
        return self.data_t is not None and len(self.data_t) > 0

    def modal_params(self) -> dict:
        out = dict(self.params)
        out.update({k: n.b for k, n in self.fuzzy.items()})
        return out


@dataclass
class Learnables:
    """Trainable non-network quantities: shared mu, per-fuzzy alpha, unknown params.

    Pinned coordinates are plain floats; learnable ones are ConstrainedParams.
    """

    mu: float | ConstrainedParam = 1.0
    alphas: dict = field(default_factory=dict)
    unknown: dict = field(default_factory=dict)

    def trainable(self) -> list[ConstrainedParam]:
        out = []
        if isinstance(self.mu, ConstrainedParam):
            out.append(self.mu)
        out += [a for a in self.alphas.values() if isinstance(a, ConstrainedParam)]
        out += list(self.unknown.values())
        return out

    def bind(self, tape: ad.Tape) -> tuple[dict, dict]:
        """Leaf Vars for the raw values and the exposed values, keyed by id."""
        raws = {id(p): tape.leaf(p.raw, p.name) for p in self.trainable()}

        def expose(p):
            return p.value(raws[id(p)]) if isinstance(p, ConstrainedParam) else p

        exposed = {
            "mu": expose(self.mu),
            "alphas": {k: expose(a) for k, a in self.alphas.items()},
            "unknown": {k: expose(u) for k, u in self.unknown.items()},
        }
        return raws, exposed

    def report(self) -> dict[str, float]:
        out = {"mu": float(self.mu)}
        for k, a in self.alphas.items():
            out[f"alpha_{k}"] = float(a)
        for k, u in self.unknown.items():
            out[k] = float(u)
        return out


@dataclass
class EvalState:
    """Everything one loss evaluation needs, bound to a single tape."""

    problem: Problem
    net: object
    tape: ad.Tape
    collocation: np.ndarray
    mu: object
    alphas: dict
    unknown: dict
    _cache: dict = field(default_factory=dict)

    def ctx(self) -> Context:
        if "ctx" not in self._cache:
            extra = None
            coll = self.collocation
            if self.problem.mc_samples is not None:
                coll, extra = _tile_samples(coll, self.problem.mc_samples)
            self._cache["ctx"] = Context(self.net, coll, self.tape, extra)
        return self._cache["ctx"]

    def ctx0(self) -> Context:
        if "ctx0" not in self._cache:
            extra = None
            t0 = np.array([self.problem.t0])
            if self.problem.mc_samples is not None:
                t0, extra = _tile_samples(t0, self.problem.mc_samples)
            self._cache["ctx0"] = self.ctx().at(t0, extra)
        return self._cache["ctx0"]

    def crisp_params(self) -> dict:
        p = dict(self.problem.params)
        p.update(self.unknown)
        return p

    def modal_params(self) -> dict:
        p = self.problem.modal_params()
        p.update(self.unknown)
        return p

    def granular_params(self) -> dict:
        fuzzy = {k: v for k, v in self.problem.fuzzy.items()}
        return granular_params(self.crisp_params(), fuzzy, self.mu, self.alphas)


def _tile_samples(t, samples):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    n, k = len(t), len(samples)
    tt = np.tile(np.asarray(t, dtype=float).reshape(-1), k)
    extra = np.repeat(samples, n, axis=0)
    return tt, extra


def _data_term(s: EvalState):
    p = s.problem
    extra = None
    t = np.asarray(p.data_t, dtype=float)
    if p.mc_samples is not None:
        # the data describes the modal system: feed the sample mean
        centre = np.atleast_2d(np.asarray(p.mc_samples, dtype=float).mean(axis=0))
        extra = np.repeat(centre.reshape(1, -1), len(t), axis=0)
    return data_loss(s.ctx().at(t, extra).x, p.data_x)


def _ic_term(s: EvalState):
    e = s.ctx0().x - s.problem.x0
    return ad.mean(e * e)


def _ic_dx_term(s: EvalState):
    e = s.ctx0().dx - s.problem.dx0
    return ad.mean(e * e)


def _fuzzy_ic_term(M):
    def fn(s: EvalState):
        e = s.ctx0().x - hmf(s.problem.x0, s.mu, s.alphas["x0"])
        return possibility_factor(s.mu, M) * ad.mean(e * e)
    return fn


def _residual_term(s: EvalState):
    g = residual_values(s.ctx(), s.problem.rhs, s.modal_params(), s.problem.order)
    return ad.mean(g * g)


def _granular_term(M):
    def fn(s: EvalState):
        g = residual_values(s.ctx(), s.problem.rhs, s.granular_params(), s.problem.order)
        return possibility_factor(s.mu, M) * ad.mean(g * g)
    return fn


def _mc_residual_term(s: EvalState):
    p = s.problem
    names = list(p.random)
    samples = np.asarray(p.mc_samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    ctx = s.ctx()
    params = s.crisp_params()
    for j, name in enumerate(names):
        params[name] = ctx.extra[:, j:j + 1]
    g = residual_values(ctx, p.rhs, params, p.order)
    return ad.mean(g * g)


def residual_likelihood(s: EvalState):
    """Normalised likelihood of a zero residual, per collocation point.

    The residual must be affine in the single random parameter; offset and
    slope are read off by evaluating it at 0 and 1.
    """
    p = s.problem
    if len(p.random) != 1:
        raise ValueError("sureness needs exactly one random parameter")
    (name, dist), = p.random.items()
    base = s.crisp_params()
    base.update({k: n.b for k, n in p.fuzzy.items() if k != name})
    at0 = dict(base, **{name: 0.0})
    at1 = dict(base, **{name: 1.0})
    g0 = residual_values(s.ctx(), p.rhs, at0, p.order)
    g1 = residual_values(s.ctx(), p.rhs, at1, p.order)
    return affine_likelihood(dist, g0, g1 - g0, at=0.0)


def _sureness_term(per_point: bool):
    def fn(s: EvalState):
        lik = residual_likelihood(s)
        if per_point:
            return ad.mean(sureness_loss(sureness(s.mu, lik)))
        return sureness_loss(sureness(s.mu, ad.mean(lik)))
    return fn


def _rule_term(M):
    def fn(s: EvalState):
        ctx = s.ctx()
        return rule_loss(s.problem.rules, [ctx.t], ctx.x, M)
    return fn


def _derivative_rule_term(M):
    def fn(s: EvalState):
        ctx = s.ctx()
        return rule_loss(s.problem.rules, [ctx.t], ctx.dx, M)
    return fn


def build_preset(preset: str, problem: Problem, possibility_M: float = 10.0,
                 rule_M: float = 5.0, sureness_per_point: bool = False,
                 weights: Mapping[str, float] | None = None) -> CompositeLoss:
    """Wire the terms of a mode's total loss.

    singular: data + ic (+ ic_dx) + residual
    possibility: data + [M^(1-mu)] ic + M^(1-mu) granular residual; the
        factor multiplies the ic term only when x0 is fuzzy
    sureness: possibility + (1 - sureness)^2
    probability: data + ic + residual averaged over parameter samples
    finn / finn-derivative: data + M (1 - R)^2 on x or dx/dt
    """
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    w = dict(weights or {})
    terms: list[LossTerm] = []

    def add(name, fn):
        terms.append(LossTerm(name, fn, w.pop(name, 1.0)))

    if problem.has_data:
        add("data", _data_term)
    if preset in ("finn", "finn-derivative"):
        if problem.rules is None:
            raise ValueError(f"preset {preset!r} needs a rule set")
        add("rule", _rule_term(rule_M) if preset == "finn" else _derivative_rule_term(rule_M))
    else:
        if problem.rhs is None:
            raise ValueError(f"preset {preset!r} needs an ODE right-hand side")
        fuzzy_ic = isinstance(problem.x0, TriangularFuzzyNumber)
        if fuzzy_ic and preset in ("singular", "probability"):
            raise ValueError(f"preset {preset!r} needs a crisp initial condition")
        if problem.x0 is not None:
            if fuzzy_ic:
                add("ic", _fuzzy_ic_term(possibility_M))
            else:
                add("ic", _ic_term)
        if problem.order == 2 and problem.dx0 is not None:
            add("ic_dx", _ic_dx_term)
        if preset == "singular":
            add("residual", _residual_term)
        elif preset == "probability":
            if problem.mc_samples is None or not problem.random:
                raise ValueError("probability preset needs random parameters and samples")
            add("residual", _mc_residual_term)
        else:
            add("residual", _granular_term(possibility_M))
            if preset == "sureness":
                add("sureness", _sureness_term(sureness_per_point))
    if w:
        raise ValueError(f"weights given for absent terms: {sorted(w)}")
    return CompositeLoss(terms, preset)
