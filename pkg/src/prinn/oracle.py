"""Ground truth that never touches autodiff: closed forms, classical RK4,
alpha-cut envelopes by brute force, and Monte Carlo ensembles."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .fuzzy import TriangularFuzzyNumber, alpha_cut
from .prob import Normal, NormalSampler

__all__ = ["CrispODE", "Envelope", "exp_decay", "damped_oscillator", "analytic",
           "rk4", "alpha_cut_envelope", "mc_ensemble", "FAMILIES"]

FAMILIES = ("exp-decay", "damped-oscillator")


@dataclass(frozen=True)
class CrispODE:
    """``x' = f(t, x)`` (order 1) or ``x'' = f(t, x, x')`` (order 2).

    ``rhs`` is vectorised: state components may be arrays, which lets one
    integration carry a whole parameter ensemble.
    """

    order: int
    rhs: object
    x0: object
    dx0: object = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if self.order == 2 and self.dx0 is None:
            raise ValueError("second-order ODE needs an initial velocity")


def exp_decay(lam, x0) -> CrispODE:
    return CrispODE(1, lambda t, x: lam * x, x0, params={"lambda": lam, "x0": x0})


def damped_oscillator(zeta, omega, x0, dx0=0.0) -> CrispODE:
    return CrispODE(2, lambda t, x, v: -2.0 * zeta * omega * v - omega * omega * x, x0, dx0,
                    params={"zeta": zeta, "omega": omega, "x0": x0, "dx0": dx0})


def _build(family: str, params: dict) -> CrispODE:
    if family == "exp-decay":
        return exp_decay(params["lambda"], params["x0"])
    if family == "damped-oscillator":
        return damped_oscillator(params["zeta"], params["omega"], params["x0"],
                                 params.get("dx0", 0.0))
    raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")


def analytic(family: str, params: dict, t, derivative: int = 0):
    """Closed-form solution (or its first/second derivative) at ``t``."""
    t = np.asarray(t, dtype=float)
    if family == "exp-decay":
        lam, x0 = params["lambda"], params["x0"]
        return x0 * lam ** derivative * np.exp(lam * t)
    if family == "damped-oscillator":
        z, w = params["zeta"], params["omega"]
        x0, v0 = params["x0"], params.get("dx0", 0.0)
        if not 0 < z < 1:
            raise ValueError(f"only the underdamped branch is available (zeta={z})")
        wd = w * math.sqrt(1.0 - z * z)
        a, b = x0, (v0 + z * w * x0) / wd
        env = np.exp(-z * w * t)
        c, s = np.cos(wd * t), np.sin(wd * t)
        x = env * (a * c + b * s)
        if derivative == 0:
            return x
        dx = -z * w * x + env * wd * (-a * s + b * c)
        if derivative == 1:
            return dx
        return -2.0 * z * w * dx - w * w * x
    raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")


def rk4(ode: CrispODE, t_grid, h: float) -> np.ndarray:
    """Classical RK4 reported on ``t_grid``.

    Steps of at most ``h``; each grid interval is split into equal substeps
    so the grid points are hit exactly. Returns positions (order 1) or the
    position component (order 2), shaped ``(len(t_grid),) + state shape``.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0):
        raise ValueError("time grid must be nondecreasing")
    if ode.order == 1:
        f = lambda t, y: ode.rhs(t, y)  # noqa: E731
        x0 = np.asarray(ode.x0, dtype=float)
        # parameter arrays in the rhs set the ensemble shape
        y = np.broadcast_to(x0, np.shape(f(t_grid[0], x0))).astype(float)
    else:
        def f(t, y):
            return np.stack(np.broadcast_arrays(y[1], ode.rhs(t, y[0], y[1])))
        x0 = np.asarray(ode.x0, dtype=float)
        v0 = np.asarray(ode.dx0, dtype=float)
        shape = np.broadcast_shapes(np.shape(x0), np.shape(v0), np.shape(ode.rhs(t_grid[0], x0, v0)))
        y = np.stack([np.broadcast_to(x0, shape), np.broadcast_to(v0, shape)]).astype(float)
    out = [y if ode.order == 1 else y[0]]
    for t0, t1 in zip(t_grid[:-1], t_grid[1:]):
        span = t1 - t0
        n = max(1, int(math.ceil(span / h - 1e-9)))
        dt = span / n
        for i in range(n):
            t = t0 + i * dt
            k1 = f(t, y)
            k2 = f(t + dt / 2, y + dt / 2 * k1)
            k3 = f(t + dt / 2, y + dt / 2 * k2)
            k4 = f(t + dt, y + dt * k3)
            y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y if ode.order == 1 else y[0])
    return np.array(out)


@dataclass
class Envelope:
    t: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    mu: float

    def contains(self, values, inflate: float = 0.0) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        return (v >= self.lo - inflate) & (v <= self.hi + inflate)

    def within(self, other: "Envelope", tol: float = 0.0) -> bool:
        return bool(np.all(self.lo >= other.lo - tol) and np.all(self.hi <= other.hi + tol))


def alpha_cut_envelope(family: str, crisp: dict, fuzzy: dict[str, TriangularFuzzyNumber],
                       mu: float, t_grid, k: int = 9, h: float = 1e-3) -> Envelope:
    """Pointwise min/max of RK4 trajectories over a ``k``-point grid of each
    fuzzy parameter's alpha-cut at level ``mu`` (full Cartesian product)."""
    if k < 2:
        raise ValueError("need at least 2 grid points per parameter")
    names = list(fuzzy)
    axes = []
    for name in names:
        lo, hi = alpha_cut(fuzzy[name], mu)
        axes.append(np.linspace(lo, hi, k) if hi > lo else np.array([lo]))
    combos = np.array(list(itertools.product(*axes))) if names else np.zeros((1, 0))
    params = dict(crisp)
    for j, name in enumerate(names):
        params[name] = combos[:, j]
    traj = rk4(_build(family, params), t_grid, h)
    traj = traj.reshape(len(t_grid), -1)
    return Envelope(np.asarray(t_grid, dtype=float), traj.min(axis=1), traj.max(axis=1), mu)


def mc_ensemble(family: str, crisp: dict, random: dict[str, Normal], n: int, seed: int,
                t_grid, h: float = 1e-3, workers: int = 1):
    """Mean and variance over time of RK4 trajectories with sampled parameters.

    Samples are split across ``workers`` generators seeded ``(seed, index)``;
    the split is part of the result's identity, the machine is not.
    """
    if n < 100:
        raise ValueError("Monte Carlo ensemble needs n >= 100")
    sizes = [n // workers + (1 if i < n % workers else 0) for i in range(workers)]
    draws = {name: [] for name in random}
    for w, size in enumerate(sizes):
        gen = NormalSampler(np.random.SeedSequence([seed, w]).generate_state(1)[0])
        for name, d in random.items():
            draws[name].append(gen.normal(d, size))
    params = dict(crisp)
    for name in random:
        params[name] = np.concatenate(draws[name])
    traj = rk4(_build(family, params), t_grid, h).reshape(len(t_grid), -1)
    return traj.mean(axis=1), traj.var(axis=1, ddof=1)
