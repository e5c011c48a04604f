"""Named experiments: training, artifacts and oracle verification.

Each experiment has two halves. ``train`` produces telemetry, a snapshot
and a trajectory table. ``checks`` recomputes every verification from
those artifacts plus the config alone, so ``verify`` can rerun it on a
directory without retraining.
"""
from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import autodiff as ad
from . import oracle
from .config import ExperimentConfig, parse_config
from .controlsim import (ControllerConfig, LoopRecord, Plant, reference_signal, rule_table,
                         run_baseline, run_closed_loop, tracking_error)
from .fuzzy import RuleSet, hmf, restriction
from .losses import Context, Learnables, Problem, build_preset
from .network import ConstrainedParam, Mlp, init, load_snapshot, snapshot_text
from .prob import sample
from .train import RunTelemetry, TrainConfig, TrainingAborted, fit

__all__ = ["Experiment", "REGISTRY", "Check", "VerificationReport", "Table", "RunArtifact",
           "list_experiments", "run", "verify", "output_root", "OUTPUT_ROOT_ENV"]

OUTPUT_ROOT_ENV = "PRINN_OUTPUT_ROOT"
FILES = ("config.txt", "telemetry.csv", "snapshot.csv", "trajectory.csv", "report.txt")


# ------------------------------------------------------------------ tables

@dataclass
class Table:
    columns: list[str]
    data: np.ndarray  # (rows, columns)

    @classmethod
    def from_columns(cls, **cols) -> "Table":
        names = list(cols)
        return cls(names, np.column_stack([np.asarray(cols[n], dtype=float).ravel() for n in names]))

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.data:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Table":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty CSV")
        body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        return cls(rows[0], body.reshape(len(rows) - 1, len(rows[0])))


# ------------------------------------------------------------------ report

@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    relation: str  # one of <, <=, >=, ==
    description: str = ""

    @property
    def passed(self) -> bool:
        v, t = self.value, self.threshold
        if not math.isfinite(v):
            return False
        return {"<": v < t, "<=": v <= t, ">=": v >= t, "==": v == t}[self.relation]


@dataclass
class VerificationReport:
    experiment: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def to_text(self) -> str:
        lines = [f"experiment={self.experiment}", f"status={'pass' if self.passed else 'fail'}",
                 f"checks={len(self.checks)}"]
        for c in self.checks:
            p = f"check.{c.name}"
            lines += [f"{p}.description={c.description}", f"{p}.value={c.value!r}",
                      f"{p}.relation={c.relation}", f"{p}.threshold={c.threshold!r}",
                      f"{p}.status={'pass' if c.passed else 'fail'}"]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "VerificationReport":
        kv = dict(line.split("=", 1) for line in text.splitlines() if "=" in line)
        names = []
        for key in kv:
            if key.startswith("check.") and key.endswith(".value"):
                names.append(key[len("check."):-len(".value")])
        checks = [Check(n, float(kv[f"check.{n}.value"]), float(kv[f"check.{n}.threshold"]),
                        kv[f"check.{n}.relation"], kv.get(f"check.{n}.description", ""))
                  for n in names]
        return cls(kv["experiment"], checks)

    def summary(self) -> str:
        out = []
        for c in self.checks:
            out.append(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} "
                       f"{c.relation} {c.threshold:.6g}  ({c.description})")
        out.append(f"overall: {'pass' if self.passed else 'fail'}")
        return "\n".join(out)


# ------------------------------------------------------------- experiments

@dataclass
class Outputs:
    telemetry: str
    snapshot: str
    trajectory: Table


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    anchor: str
    train: Callable[[ExperimentConfig], Outputs]
    checks: Callable[[ExperimentConfig, Table, Table, dict], list[Check]]


def _grid(cfg: ExperimentConfig) -> np.ndarray:
    tc = cfg.train
    return np.linspace(tc.t_lo, tc.t_hi, cfg.oracle["grid_points"])


def _widths(cfg: ExperimentConfig, n_in: int = 1) -> list[int]:
    return [n_in, *cfg.hidden, 1]


def _fit(cfg, net, learnables, problem, loss, tc: TrainConfig | None = None):
    return fit(net, learnables, problem, loss, tc or cfg.train, progress_every=500)


# pinn-decay ----------------------------------------------------------------

def _decay_rhs(t, x, p):
    return p["lambda"] * x


def _pinn_train(cfg: ExperimentConfig) -> Outputs:
    p = cfg.problem
    problem = Problem(order=1, rhs=_decay_rhs, params={"lambda": p["lambda"]},
                      t0=cfg.train.t_lo, x0=p["x0"])
    net = init(_widths(cfg), cfg.seed)
    tel, snap = _fit(cfg, net, Learnables(), problem,
                     build_preset("singular", problem, weights=None))
    t = _grid(cfg)
    return Outputs(tel.to_csv(), snap, Table.from_columns(t=t, x_hat=net(t[:, None])))


def _pinn_checks(cfg, traj, tel, extra):
    p = cfg.problem
    exact = oracle.analytic("exp-decay", {"lambda": p["lambda"], "x0": p["x0"]},
                            traj["t"] - cfg.train.t_lo)
    err = float(np.max(np.abs(traj["x_hat"] - exact)))
    lo, hi = cfg.train.t_lo, cfg.train.t_hi
    return [
        Check("max_abs_error", err, 5e-2, "<",
              f"max|x_hat - analytic| on [{lo:g},{hi:g}]"),
        Check("final_total_loss", float(tel["total"][-1]), 1e-4, "<",
              "total loss at the last epoch"),
    ]


# fcinn-decay ---------------------------------------------------------------

def _fcinn_problem(cfg) -> Problem:
    p = cfg.problem
    return Problem(order=1, rhs=_decay_rhs, fuzzy={"lambda": p["lambda"]},
                   t0=cfg.train.t_lo, x0=p["x0"])


def _pinned_column(mu: float, alpha: float) -> str:
    return f"x_mu{mu:g}_alpha{alpha:g}"


def _fcinn_train(cfg: ExperimentConfig) -> Outputs:
    p = cfg.problem
    problem = _fcinn_problem(cfg)
    loss = build_preset("possibility", problem, possibility_M=cfg.train.possibility_M)
    net = init(_widths(cfg), cfg.seed)
    learn = Learnables(mu=ConstrainedParam.from_value(p["mu_init"], name="mu"),
                       alphas={"lambda": ConstrainedParam.from_value(p["alpha_init"],
                                                                     name="alpha_lambda")})
    tel, snap = _fit(cfg, net, learn, problem, loss)
    t = _grid(cfg)
    cols = {"t": t, "x_hat": net(t[:, None])}
    pinned_cfg = TrainConfig(**{**cfg.train.__dict__, "epochs": p["envelope_epochs"]})
    # granules coincide at mu = 1 whatever alpha is; train each distinct one once
    trained = {}
    for mu in p["envelope_mu"]:
        for alpha in p["envelope_alpha"]:
            key = (float(hmf(p["lambda"], mu, alpha)), float(mu))
            if key not in trained:
                pinned_net = init(_widths(cfg), cfg.seed)
                pinned = Learnables(mu=float(mu), alphas={"lambda": float(alpha)})
                _fit(cfg, pinned_net, pinned, problem, loss, pinned_cfg)
                trained[key] = pinned_net(t[:, None])
            cols[_pinned_column(mu, alpha)] = trained[key]
    # plot data only; the checks rebuild the envelopes themselves
    for mu in p["envelope_mu"]:
        env = oracle.alpha_cut_envelope("exp-decay", {"x0": p["x0"]}, {"lambda": p["lambda"]},
                                        mu, t - cfg.train.t_lo, cfg.oracle["k"], cfg.oracle["h"])
        cols[f"env_lo_mu{mu:g}"] = env.lo
        cols[f"env_hi_mu{mu:g}"] = env.hi
    return Outputs(tel.to_csv(), snap, Table.from_columns(**cols))


def _fcinn_checks(cfg, traj, tel, extra):
    p = cfg.problem
    t = traj["t"]
    crisp = {"x0": p["x0"]}
    fuzzy = {"lambda": p["lambda"]}
    h, k = cfg.oracle["h"], cfg.oracle["k"]
    t_rel = t - cfg.train.t_lo
    inside = total = 0
    worst = 0.0
    for mu in p["envelope_mu"]:
        env = oracle.alpha_cut_envelope("exp-decay", crisp, fuzzy, mu, t_rel, k, h)
        for alpha in p["envelope_alpha"]:
            x = traj[_pinned_column(mu, alpha)]
            ok = env.contains(x, inflate=p["inflate"])
            inside += int(ok.sum())
            total += ok.size
            worst = max(worst, float(np.max(np.maximum(env.lo - x, x - env.hi))))
    mu_l, alpha_l = extra["mu"], extra["alpha_lambda"]
    env = oracle.alpha_cut_envelope("exp-decay", crisp, fuzzy, mu_l, t_rel, k, h)
    learned_ok = env.contains(traj["x_hat"], inflate=p["inflate"])
    lam = float(hmf(p["lambda"], mu_l, alpha_l))
    return [
        Check("envelope_containment_ratio", inside / total, 1.0, ">=",
              f"share of pinned-granule trajectory points inside the alpha-cut envelope "
              f"inflated by {p['inflate']:g}"),
        Check("envelope_worst_excursion", worst, p["inflate"], "<=",
              "largest distance outside the envelope over all pinned runs"),
        Check("learned_envelope_containment_ratio", float(learned_ok.mean()), 1.0, ">=",
              "learned-granule trajectory inside the envelope at the learned mu"),
        Check("learned_mu_interior", float(0.0 < mu_l < 1.0), 1.0, "==",
              "learned mu strictly inside (0, 1)"),
        Check("learned_lambda_in_support", float(p["lambda"].a <= lam <= p["lambda"].c), 1.0,
              "==", "learned lambda granule within the fuzzy support"),
    ]


# sinnet-oscillator -----------------------------------------------------------

def _osc_rhs(t, x, dx, p):
    w = p["omega"]
    return -2.0 * p["zeta"] * w * dx - w * w * x


def _osc_exact(cfg, t, zeta):
    p = cfg.problem
    return oracle.analytic("damped-oscillator", {"zeta": zeta, "omega": p["omega"],
                                                 "x0": p["x0"], "dx0": p["dx0"]},
                           np.asarray(t) - cfg.train.t_lo)


def _sinnet_train(cfg: ExperimentConfig) -> Outputs:
    p = cfg.problem
    tc = cfg.train
    data_t = np.linspace(tc.t_lo, tc.t_hi, p["data_points"])
    probability = cfg.preset == "probability"
    problem = Problem(
        order=2, rhs=_osc_rhs, params={"omega": p["omega"]},
        fuzzy={} if probability else {"zeta": p["zeta_fuzzy"]},
        random={"zeta": p["zeta_normal"]} if cfg.preset != "possibility" else {},
        t0=tc.t_lo, x0=p["x0"], dx0=p["dx0"], data_t=data_t,
        data_x=_osc_exact(cfg, data_t, p["data_zeta"]),
        mc_samples=sample(p["zeta_normal"], cfg.seed, p["samples"]) if probability else None)
    if probability:
        learn = Learnables()
        net = init(_widths(cfg, 2), cfg.seed)
    else:
        learn = Learnables(mu=ConstrainedParam.from_value(p["mu_init"], name="mu"),
                           alphas={"zeta": ConstrainedParam.from_value(p["alpha_init"],
                                                                       name="alpha_zeta")})
        net = init(_widths(cfg), cfg.seed)
    loss = build_preset(cfg.preset, problem, possibility_M=tc.possibility_M,
                        sureness_per_point=p["per_point"])
    tel, snap = _fit(cfg, net, learn, problem, loss)
    t = _grid(cfg)
    if probability:
        x_hat = net(np.column_stack([t, np.full_like(t, p["zeta_normal"].mean)]))
    else:
        x_hat = net(t[:, None])
    return Outputs(tel.to_csv(), snap, Table.from_columns(t=t, x_hat=x_hat))


def _sinnet_checks(cfg, traj, tel, extra):
    p = cfg.problem
    t = traj["t"]
    x = traj["x_hat"]
    mean, var = oracle.mc_ensemble(
        "damped-oscillator", {"omega": p["omega"], "x0": p["x0"], "dx0": p["dx0"]},
        {"zeta": p["zeta_normal"]}, cfg.oracle["mc_samples"], cfg.seed, t - cfg.train.t_lo,
        cfg.oracle["h"], cfg.oracle["mc_workers"])
    band = p["band_sigmas"] * np.sqrt(var) + 5e-2
    inside = np.abs(x - mean) <= band
    checks = [
        Check("ensemble_band_ratio", float(inside.mean()), 1.0, ">=",
              f"share of grid points with |x_hat - mc_mean| <= {p['band_sigmas']:g} sd + 0.05"),
        Check("data_fit_max_abs_error",
              float(np.max(np.abs(x - _osc_exact(cfg, t, p["data_zeta"])))), 0.25, "<",
              f"max|x_hat - analytic(zeta={p['data_zeta']:g})| on the grid"),
    ]
    if "sureness" in tel.columns:
        checks.append(Check("final_sureness_loss", float(tel["sureness"][-1]), 0.1, "<",
                            "L_s at the last epoch"))
    if "mu" in extra and cfg.preset != "probability":
        checks.append(Check("learned_mu_interior", float(0.0 < extra["mu"] < 1.0), 1.0, "==",
                            "learned mu strictly inside (0, 1)"))
    return checks


# finn cases ---------------------------------------------------------------

def _case1_rules(cfg) -> RuleSet:
    p = cfg.problem
    return RuleSet.from_pairs([((p["t_small"],), p["x_large"]),
                               ((p["t_large"],), p["x_medium"])], "min", "max")


def _case2_rules(cfg) -> RuleSet:
    p = cfg.problem
    return RuleSet.from_pairs([((p["t_near_zero"],), p["dx_small"]),
                               ((p["t_about_10"],), p["dx_about_2"])], "min", "max")


def _finn_problem(cfg, rules) -> Problem:
    p = cfg.problem
    if len(p["data_t"]) != len(p["data_x"]):
        raise ValueError(f"problem.data_t has {len(p['data_t'])} values, "
                         f"problem.data_x has {len(p['data_x'])}")
    return Problem(order=1, t0=cfg.train.t_lo, data_t=np.array(p["data_t"]),
                   data_x=np.array(p["data_x"]), rules=rules)


def _finn_train(cfg: ExperimentConfig, rules: RuleSet, derivative: bool) -> Outputs:
    problem = _finn_problem(cfg, rules)
    loss = build_preset(cfg.preset, problem, rule_M=cfg.train.rule_M)
    net = init(_widths(cfg), cfg.seed)
    tel, snap = _fit(cfg, net, Learnables(), problem, loss)
    t = _grid(cfg)
    ctx = Context(net.bind(ad.Tape()), t)
    cols = {"t": t, "x_hat": ctx.x.value}
    if derivative:
        cols["dx_hat"] = ctx.dx.value
    return Outputs(tel.to_csv(), snap, Table.from_columns(**cols))


def _attainment(rules: RuleSet, t: np.ndarray, y: np.ndarray, lo: float, hi: float):
    """R(t, y) and the brute-force best ``max_v R(t, v)`` over a dense grid."""
    r = np.asarray(restriction(rules, [t], y), dtype=float)
    v = np.linspace(lo, hi, 2001)
    best = np.array([np.max(restriction(rules, [np.full_like(v, ti)], v)) for ti in t])
    return r, best


def _finn_checks(cfg, traj, tel, extra, rules, column, span, strict: bool):
    r, best = _attainment(rules, traj["t"], traj[column], *span)
    attain = float(np.mean(r / np.maximum(best, 1e-300)))
    checks = [
        Check("rule_attainment", attain, 0.9, ">=",
              f"mean of R(t, {column}) / max_v R(t, v) over the grid (brute-force oracle)"),
    ]
    lr = tel["rule"][:100]
    if not strict:
        checks.append(Check("rule_loss_reduction", float(tel["rule"][-1] / tel["rule"][0]), 1.0,
                            "<", "final L_R relative to the first epoch"))
    elif len(lr) >= 2:
        checks.append(Check("rule_loss_strictly_decreasing_first_100",
                            float(np.all(np.diff(lr) < 0)), 1.0, "==",
                            f"L_R strictly decreasing over the first {len(lr)} epochs"))
    return checks


def _case1_checks(cfg, traj, tel, extra):
    p = cfg.problem
    span = (min(p["x_medium"].params[0] - 10, 0.0), p["x_large"].params[0] + 10)
    checks = _finn_checks(cfg, traj, tel, extra, _case1_rules(cfg), "x_hat", span, True)
    return checks + _data_fit(cfg, traj)


def _case2_checks(cfg, traj, tel, extra):
    checks = _finn_checks(cfg, traj, tel, extra, _case2_rules(cfg), "dx_hat", (-10.0, 10.0), False)
    return checks + _data_fit(cfg, traj)


def _data_fit(cfg, traj):
    p = cfg.problem
    x = np.interp(np.array(p["data_t"]), traj["t"], traj["x_hat"])
    err = float(np.max(np.abs(x - np.array(p["data_x"]))))
    return [Check("data_max_abs_error", err, 0.5, "<", "max|x_hat - data| at the data times")]


# finn-controller ------------------------------------------------------------

def _controller_setup(cfg):
    p = cfg.problem
    plant = Plant(kind=p["plant"], gain=p["gain"], tau=p["tau"], omega=p["omega"],
                  zeta=p["zeta"], dt=p["dt"])
    ref = reference_signal(p["reference"], p["amplitude"], p["frequency"], p["slope"])
    ccfg = ControllerConfig(error_scale=p["error_scale"], rate_scale=p["rate_scale"],
                            control_gain=p["control_gain"],
                            learning_rate=cfg.train_values["learning_rate"],
                            train_steps=p["train_steps"], M=cfg.train_values["rule_M"])
    return plant, ref, ccfg


def _controller_train(cfg: ExperimentConfig) -> Outputs:
    plant, ref, ccfg = _controller_setup(cfg)
    records, net = run_closed_loop(plant, None, rule_table(), ref, cfg.problem["horizon"],
                                   ccfg, seed=cfg.seed, widths=_widths(cfg, 2))
    tel = RunTelemetry(["step", *LoopRecord.FIELDS])
    for k, r in enumerate(records):
        tel.append([k] + [getattr(r, f) for f in LoopRecord.FIELDS])
    traj = Table.from_columns(**{f: [getattr(r, f) for r in records] for f in LoopRecord.FIELDS})
    return Outputs(tel.to_csv(), snapshot_text(net), traj)


def _controller_checks(cfg, traj, tel, extra):
    p = cfg.problem
    plant, ref, ccfg = _controller_setup(cfg)
    base = run_baseline(plant, ref, p["horizon"])
    records = [LoopRecord(*(float(traj[f][k]) for f in LoopRecord.FIELDS))
               for k in range(len(traj.data))]
    ratio = tracking_error(records, p["tail"]) / max(tracking_error(base, p["tail"]), 1e-300)
    arith = float(np.max(np.abs(traj["reference"] - traj["output"] - traj["error"])))
    return [
        Check("tracking_improvement_ratio", ratio, 0.2, "<=",
              f"mean|e| over the final {p['tail']:g} of the horizon relative to the "
              f"zero-controller baseline"),
        Check("max_rule_loss", float(np.max(traj["rule_loss"])), ccfg.M, "<=",
              "instantaneous L_R bounded by M"),
        Check("error_arithmetic", arith, 0.0, "==", "e = reference - output on every step"),
    ]


REGISTRY: dict[str, Experiment] = {e.name: e for e in [
    Experiment("pinn-decay", "crisp PINN on exponential decay, checked against the closed form",
               "dx/dt = -0.5 x, x(0) = 5", _pinn_train, _pinn_checks),
    Experiment("fcinn-decay", "fuzzy decay rate through HMF granules, checked against "
               "alpha-cut envelopes", "dx/dt = lambda x, lambda = (-0.6, -0.5, -0.4), "
               "loss M^(1-mu) L_g(H(g))", _fcinn_train, _fcinn_checks),
    Experiment("sinnet-oscillator", "damped oscillator with fuzzy and normal damping "
               "(sureness), checked against a Monte Carlo ensemble",
               "x'' + 2 zeta w x' + w^2 x = 0, L_s = (1 - mu N)^2", _sinnet_train,
               _sinnet_checks),
    Experiment("finn-case1", "rules on the state itself, checked by grid brute force",
               "R(t, x) = small(t) ^ large(x) + large(t) ^ medium(x)",
               lambda cfg: _finn_train(cfg, _case1_rules(cfg), False), _case1_checks),
    Experiment("finn-derivative-case2", "rules on the time derivative, checked by grid "
               "brute force", "R(t, dx/dt) = near_zero(t) ^ small(dx/dt) + "
               "about_10(t) ^ about_2(dx/dt)",
               lambda cfg: _finn_train(cfg, _case2_rules(cfg), True), _case2_checks),
    Experiment("finn-controller", "online rule-trained controller on a closed loop, "
               "checked against the zero-controller baseline",
               "L_R = M (1 - R(e, de/dt, u))^2 per control step", _controller_train,
               _controller_checks),
]}


def list_experiments() -> list[tuple[str, str, str]]:
    return [(e.name, e.description, e.anchor) for e in REGISTRY.values()]


# -------------------------------------------------------------------- run

@dataclass
class RunArtifact:
    directory: Path
    report: VerificationReport

    def path(self, name: str) -> Path:
        return self.directory / name


def output_root(cfg: ExperimentConfig | None = None) -> Path:
    env = os.environ.get(OUTPUT_ROOT_ENV)
    if env:
        return Path(env)
    return Path(cfg.output_dir if cfg is not None else "runs")


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _snapshot_extra(text: str) -> dict:
    return load_snapshot(text)[1]


def run(cfg: ExperimentConfig, directory: str | Path | None = None) -> RunArtifact:
    """Train, verify and write the five artifact files into ``directory``.

    Defaults to ``<output root>/<experiment name>``. On a training abort
    the telemetry gathered so far is still written before re-raising.
    """
    exp = REGISTRY[cfg.name]
    out = Path(directory) if directory is not None else output_root(cfg) / cfg.name
    _write_atomic(out / "config.txt", cfg.text())
    try:
        res = exp.train(cfg)
    except TrainingAborted as exc:
        if exc.telemetry is not None:
            _write_atomic(out / "telemetry.csv", exc.telemetry.to_csv())
        raise
    _write_atomic(out / "telemetry.csv", res.telemetry)
    _write_atomic(out / "snapshot.csv", res.snapshot)
    _write_atomic(out / "trajectory.csv", res.trajectory.to_csv())
    report = VerificationReport(cfg.name, exp.checks(
        cfg, res.trajectory, Table.from_csv(res.telemetry), _snapshot_extra(res.snapshot)))
    _write_atomic(out / "report.txt", report.to_text())
    return RunArtifact(out, report)


def verify(directory: str | Path) -> VerificationReport:
    """Recompute every check from the files in ``directory``."""
    d = Path(directory)
    missing = [f for f in FILES[:-1] if not (d / f).is_file()]
    if missing:
        raise FileNotFoundError(f"{d} lacks {', '.join(missing)}")
    cfg = parse_config((d / "config.txt").read_text(encoding="utf-8"))
    tel = Table.from_csv((d / "telemetry.csv").read_text(encoding="utf-8"))
    traj = Table.from_csv((d / "trajectory.csv").read_text(encoding="utf-8"))
    extra = _snapshot_extra((d / "snapshot.csv").read_text(encoding="utf-8"))
    return VerificationReport(cfg.name, REGISTRY[cfg.name].checks(cfg, traj, tel, extra))
