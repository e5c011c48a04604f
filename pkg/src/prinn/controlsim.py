"""Closed-loop simulation with an online-trained rule-informed controller.

The controller network maps normalised ``(e, de/dt)`` to a normalised
control ``u``. At every control step it takes gradient steps on
``M (1 - R(e, de, u))^2`` for the current sample only, starting from an
untrained network. No defuzzification takes place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .fuzzy import MembershipFunction, RuleSet, restriction
from .network import Mlp, init
from .train import Adam

__all__ = ["Plant", "LoopRecord", "ControllerConfig", "PlantDivergence", "rule_table",
           "control_output", "OUTPUT_LEVELS",
           "reference_signal", "run_closed_loop", "run_baseline", "tracking_error",
           "LEVELS"]

LEVELS = {
    "N": MembershipFunction.triangular(-1.0, -1.0, 0.0),
    "Z": MembershipFunction.triangular(-1.0, 0.0, 1.0),
    "P": MembershipFunction.triangular(0.0, 1.0, 1.0),
}

# Output levels span the whole universe so that M (1 - R)^2 has a nonzero
# slope wherever the active rule points, whatever the untrained net emits.
OUTPUT_LEVELS = {
    "N": MembershipFunction.triangular(-1.0, -1.0, 1.0),
    "Z": MembershipFunction.triangular(-1.0, 0.0, 1.0),
    "P": MembershipFunction.triangular(-1.0, 1.0, 1.0),
}

# rows: error level, columns: error-derivative level
_PD_TABLE = {
    ("N", "N"): "N", ("N", "Z"): "N", ("N", "P"): "Z",
    ("Z", "N"): "N", ("Z", "Z"): "Z", ("Z", "P"): "P",
    ("P", "N"): "Z", ("P", "Z"): "P", ("P", "P"): "P",
}


def rule_table(tnorm: str = "min", snorm: str = "max", wide_output: bool = True) -> RuleSet:
    """3x3 antisymmetric PD rule base over (e, de) -> u on [-1, 1] universes.

    ``wide_output=False`` reuses the input partition for the control levels.
    """
    out = OUTPUT_LEVELS if wide_output else LEVELS
    pairs = [((LEVELS[e], LEVELS[de]), out[u]) for (e, de), u in _PD_TABLE.items()]
    return RuleSet.from_pairs(pairs, tnorm, snorm)


class PlantDivergence(RuntimeError):
    pass


@dataclass
class Plant:
    """``first-order``: tau y' = -y + K u.  ``second-order``: y'' + 2 zeta w y' + w^2 y = w^2 K u."""

    kind: str = "first-order"
    gain: float = 1.0
    tau: float = 1.0
    omega: float = 1.0
    zeta: float = 0.5
    dt: float = 0.01
    substeps: int = 4
    state: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        if self.kind not in ("first-order", "second-order"):
            raise ValueError(f"unknown plant kind {self.kind!r}")
        if self.dt <= 0:
            raise ValueError("plant step must be positive")
        if self.kind == "first-order" and self.tau <= 0:
            raise ValueError("time constant must be positive")
        self.state = np.array(self.state, dtype=float)

    @property
    def output(self) -> float:
        return float(self.state[0])

    def advance(self, u: float):
        """Hold ``u`` for one step ``dt`` and integrate with RK4 substeps."""
        if self.kind == "first-order":
            K, tau = self.gain, self.tau

            def f(s):
                return np.array([(-s[0] + K * u) / tau, 0.0])
        else:
            w, z, K = self.omega, self.zeta, self.gain

            def f(s):
                return np.array([s[1], -2 * z * w * s[1] - w * w * s[0] + w * w * K * u])
        self.state = _rk4_autonomous(f, self.state, self.dt, self.substeps)
        if not np.all(np.isfinite(self.state)):
            raise PlantDivergence("plant state became non-finite")


def _rk4_autonomous(f, y, span: float, n: int) -> np.ndarray:
    dt = span / n
    for _ in range(n):
        k1 = f(y)
        k2 = f(y + dt / 2 * k1)
        k3 = f(y + dt / 2 * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


@dataclass(frozen=True)
class LoopRecord:
    time: float
    reference: float
    output: float
    error: float
    error_rate: float
    control: float
    rule_loss: float

    FIELDS = ("time", "reference", "output", "error", "error_rate", "control", "rule_loss")


@dataclass
class ControllerConfig:
    error_scale: float = 0.25
    rate_scale: float = 5.0
    control_gain: float = 5.0
    learning_rate: float = 1e-2
    train_steps: int = 1
    M: float = 5.0
    divergence_bound: float = 1e6
    tnorm: str = "min"
    snorm: str = "max"

    def __post_init__(self):
        if min(self.error_scale, self.rate_scale, self.control_gain) <= 0:
            raise ValueError("scaling gains must be positive")
        if self.train_steps < 0:
            raise ValueError("train_steps must be >= 0")


def reference_signal(kind: str, amplitude: float = 1.0, frequency: float = 0.1,
                     slope: float = 0.1):
    """Reference as a function of time: ``step``, ``sine`` or ``ramp``."""
    if kind == "step":
        return lambda t: amplitude
    if kind == "sine":
        return lambda t: amplitude * math.sin(2 * math.pi * frequency * t)
    if kind == "ramp":
        return lambda t: slope * t
    if kind == "zero":
        return lambda t: 0.0
    raise ValueError(f"unknown reference {kind!r}")


def _controller_step(net: Mlp, opt: Adam, rs: RuleSet, en: float, den: float, M: float):
    tape = ad.Tape()
    bound = net.bind(tape)
    u = ad.tanh(bound(np.array([[en, den]])))
    r = restriction(rs, [en, den], u)
    d = 1.0 - r
    loss = d * d * M
    loss = ad.total(loss)
    grads = ad.grad(loss, bound.params)
    net.set_parameters(opt.update(net.parameters(), grads))


def control_output(net: Mlp, en: float, den: float) -> float:
    """Normalised control in (-1, 1): tanh of the network output."""
    return float(np.tanh(net(np.array([[en, den]]))[0, 0]))


def _instant_rule_loss(rs, en, den, un, M):
    r = float(np.ravel(restriction(rs, [en, den], un))[0])
    return M * (1.0 - r) ** 2


def run_closed_loop(plant: Plant, net: Mlp | None, rs: RuleSet, reference, horizon: int,
                    cfg: ControllerConfig, seed: int = 0, widths=(2, 16, 16, 1)):
    """Simulate ``horizon`` control steps; returns ``(records, net)``.

    ``net=None`` starts from ``init(widths, seed)``. Each step: measure,
    form (e, de) with a backward difference, evaluate ``u`` with the
    current weights, train on this sample, then advance the plant.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least one step")
    if net is None:
        net = init(widths, seed)
    opt = Adam(cfg.learning_rate)
    records = []
    e_prev = None
    for k in range(horizon):
        t = k * plant.dt
        r = float(reference(t))
        y = plant.output
        e = r - y
        de = 0.0 if e_prev is None else (e - e_prev) / plant.dt
        en = float(np.clip(e / cfg.error_scale, -1.0, 1.0))
        den = float(np.clip(de / cfg.rate_scale, -1.0, 1.0))
        un = control_output(net, en, den)
        u = cfg.control_gain * un
        records.append(LoopRecord(t, r, y, e, de, u, _instant_rule_loss(rs, en, den, un, cfg.M)))
        for _ in range(cfg.train_steps):
            _controller_step(net, opt, rs, en, den, cfg.M)
        plant.advance(u)
        if np.any(np.abs(plant.state) > cfg.divergence_bound):
            raise PlantDivergence(f"plant state {plant.state} exceeded bound at t={t + plant.dt:.4g}")
        e_prev = e
    return records, net


def run_baseline(plant: Plant, reference, horizon: int) -> list[LoopRecord]:
    """Same loop with the control held at zero."""
    records = []
    e_prev = None
    for k in range(horizon):
        t = k * plant.dt
        r = float(reference(t))
        y = plant.output
        e = r - y
        de = 0.0 if e_prev is None else (e - e_prev) / plant.dt
        records.append(LoopRecord(t, r, y, e, de, 0.0, 0.0))
        plant.advance(0.0)
        e_prev = e
    return records


def tracking_error(records, tail: float = 0.25) -> float:
    """Mean |e| over the final ``tail`` fraction of the horizon."""
    n = len(records)
    start = n - max(1, int(round(n * tail)))
    return float(np.mean([abs(r.error) for r in records[start:]]))
