"""Collocation sampling, Adam and the training loop with per-epoch telemetry."""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .losses import CompositeLoss, EvalState, Learnables, LossTermError, Problem
from .network import Mlp, snapshot_text

log = logging.getLogger(__name__)

__all__ = ["TrainConfig", "RunTelemetry", "TrainingAborted", "Adam", "sample_collocation",
           "evaluate", "step", "fit"]

STRATEGIES = ("uniform-grid", "uniform-random")


class TrainingAborted(RuntimeError):
    """Training hit a non-finite loss or gradient; ``telemetry`` holds what ran."""

    def __init__(self, msg: str, term: str | None = None, telemetry=None):
        super().__init__(msg)
        self.term = term
        self.telemetry = telemetry


@dataclass
class TrainConfig:
    epochs: int = 5000
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    collocation_count: int = 101
    t_lo: float = 0.0
    t_hi: float = 3.0
    collocation_strategy: str = "uniform-grid"
    seed: int = 0
    preset: str = "singular"
    possibility_M: float = 10.0
    rule_M: float = 5.0
    early_stop: float = 1e-6

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.t_lo < self.t_hi:
            raise ValueError(f"empty domain [{self.t_lo}, {self.t_hi}]")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.collocation_count < 1:
            raise ValueError("need at least one collocation point")
        if self.collocation_strategy not in STRATEGIES:
            raise ValueError(f"unknown collocation strategy {self.collocation_strategy!r}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")


@dataclass
class RunTelemetry:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)

    def append(self, row):
        self.rows.append(tuple(row))

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(str(r[0]) + "," + ",".join(repr(float(v)) for v in r[1:]) + "\n")
        return buf.getvalue()


def sample_collocation(cfg: TrainConfig) -> np.ndarray:
    n, lo, hi = cfg.collocation_count, cfg.t_lo, cfg.t_hi
    if cfg.collocation_strategy == "uniform-grid":
        if n == 1:
            return np.array([lo])
        return np.linspace(lo, hi, n)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    return np.sort(rng.uniform(lo, hi, n))


class Adam:
    """Adam with bias correction over a list of numpy arrays."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = None
        self.v = None
        self.t = 0

    def update(self, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        out = []
        for k, (p, g) in enumerate(zip(params, grads)):
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * g
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * g * g
            mhat = self.m[k] / c1
            vhat = self.v[k] / c2
            out.append(p - self.lr * mhat / (np.sqrt(vhat) + self.eps))
        return out


def evaluate(net: Mlp, learnables: Learnables, problem: Problem, loss: CompositeLoss,
             collocation, with_grad: bool = True):
    """One loss evaluation on a fresh tape.

    Returns ``(total, parts, grads)`` with floats for the loss values and a
    list of gradient arrays ordered as network parameters then learnables.
    """
    tape = ad.Tape()
    bound = net.bind(tape)
    raws, exposed = learnables.bind(tape)
    state = EvalState(problem, bound, tape, np.asarray(collocation, dtype=float),
                      exposed["mu"], exposed["alphas"], exposed["unknown"])
    total, parts = loss.evaluate(state)
    values = {k: float(ad.value_of(v)) for k, v in parts.items()}
    total_f = float(ad.value_of(total))
    grads = None
    if with_grad:
        targets = bound.params + [raws[id(p)] for p in learnables.trainable()]
        grads = ad.grad(total, targets)
    return total_f, values, grads


def step(net: Mlp, learnables: Learnables, problem: Problem, loss: CompositeLoss,
         collocation, opt: Adam):
    """Evaluate, then apply one Adam update in place. Returns ``(total, parts)``."""
    total, parts, grads = evaluate(net, learnables, problem, loss, collocation)
    if not np.isfinite(total):
        bad = [k for k, v in parts.items() if not np.isfinite(v)]
        raise TrainingAborted(f"non-finite loss in {bad}", bad[0] if bad else None)
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingAborted("non-finite gradient", None)
    trainable = learnables.trainable()
    params = net.parameters() + [np.asarray(p.raw) for p in trainable]
    new = opt.update(params, grads)
    n_net = len(net.parameters())
    net.set_parameters(new[:n_net])
    for p, raw in zip(trainable, new[n_net:]):
        p.raw = float(raw)
    return total, parts


def fit(net: Mlp, learnables: Learnables, problem: Problem, loss: CompositeLoss,
        cfg: TrainConfig, progress_every: int = 0) -> tuple[RunTelemetry, str]:
    """Train until ``cfg.epochs`` or total loss below ``cfg.early_stop``.

    Each telemetry row holds the loss values evaluated *before* that
    epoch's update, then the learnable quantities at the same moment.
    """
    collocation = sample_collocation(cfg)
    opt = Adam(cfg.learning_rate, cfg.beta1, cfg.beta2)
    extra_cols = list(learnables.report())
    tel = RunTelemetry(["epoch"] + loss.names() + ["total"] + extra_cols)
    for epoch in range(cfg.epochs):
        learned = learnables.report()
        try:
            total, parts = step(net, learnables, problem, loss, collocation, opt)
        except LossTermError as exc:
            raise TrainingAborted(str(exc), exc.term, tel) from exc
        except TrainingAborted as exc:
            exc.telemetry = tel
            raise
        tel.append([epoch] + [parts[n] for n in loss.names()] + [total]
                   + [learned[c] for c in extra_cols])
        if progress_every and epoch % progress_every == 0:
            log.info("epoch %d total %.3e", epoch, total)
        if total < cfg.early_stop:
            break
    return tel, snapshot_text(net, learnables.report())
