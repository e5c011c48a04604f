"""Strict parser for the sectioned ``key = value`` experiment config.

Grammar (one item per line)::

    # comment            ; also a comment
    [section]
    key = value

Keys are unique per section. Values are scalars, comma-separated lists,
or memberships written ``shape(p1, p2, ...)``. Every problem found is
reported with its line number; parsing never stops at the first one.
"""
from __future__ import annotations

import difflib
import re
from dataclasses import dataclass, field, replace

from .fuzzy import MembershipFunction, TriangularFuzzyNumber
from .prob import Normal
from .train import STRATEGIES, TrainConfig

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "render", "override",
           "EXPERIMENT_NAMES", "SECTIONS"]

EXPERIMENT_NAMES = ("pinn-decay", "fcinn-decay", "sinnet-oscillator", "finn-case1",
                    "finn-derivative-case2", "finn-controller")
SECTIONS = ("experiment", "network", "train", "problem", "oracle", "output")


class ConfigError(ValueError):
    """All problems found in one config, each prefixed with its line."""

    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = list(errors)


# ------------------------------------------------------------ value kinds
# each converter takes the raw string and returns a value or raises ValueError

def _int(lo=None):
    def conv(s):
        try:
            v = int(s)
        except ValueError:
            raise ValueError(f"expected an integer, got {s!r}") from None
        if lo is not None and v < lo:
            raise ValueError(f"must be >= {lo}, got {v}")
        return v
    return conv


def _float(lo=None, hi=None, lo_open=False, hi_open=False):
    def conv(s):
        try:
            v = float(s)
        except ValueError:
            raise ValueError(f"expected a number, got {s!r}") from None
        if v != v or v in (float("inf"), float("-inf")):
            raise ValueError("must be finite")
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise ValueError(f"must be {'>' if lo_open else '>='} {lo}, got {v}")
        if hi is not None and (v > hi or (hi_open and v == hi)):
            raise ValueError(f"must be {'<' if hi_open else '<='} {hi}, got {v}")
        return v
    return conv


def _choice(options):
    def conv(s):
        if s not in options:
            hint = difflib.get_close_matches(s, options, 1)
            extra = f"; did you mean {hint[0]!r}?" if hint else ""
            raise ValueError(f"{s!r} is not one of {', '.join(options)}{extra}")
        return s
    return conv


def _bool(s):
    low = s.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true or false, got {s!r}")


def _floats(n=None, each=None):
    each = each or _float()

    def conv(s):
        parts = [p.strip() for p in s.split(",")]
        if parts == [""]:
            parts = []
        if n is not None and len(parts) != n:
            raise ValueError(f"expected {n} comma-separated numbers, got {len(parts)}")
        if not parts:
            raise ValueError("expected at least one number")
        return tuple(each(p) for p in parts)
    return conv


def _ints(lo=1):
    one = _int(lo)

    def conv(s):
        parts = [p.strip() for p in s.split(",") if p.strip()]
        if not parts:
            raise ValueError("expected at least one integer")
        return tuple(one(p) for p in parts)
    return conv


def _fuzzy(s):
    return TriangularFuzzyNumber(*_floats(3)(s))


def _normal(s):
    mean, var = _floats(2)(s)
    if var <= 0:
        raise ValueError(f"variance must be positive, got {var}")
    return Normal(mean, var)


_MEMBERSHIP = re.compile(r"^(\w+)\s*\((.*)\)$")


def _membership(s):
    m = _MEMBERSHIP.match(s)
    if not m:
        raise ValueError(f"expected shape(p1, p2, ...), got {s!r}")
    shape = _choice(tuple(MembershipFunction.SHAPES))(m.group(1))
    return MembershipFunction(shape, _floats()(m.group(2)))


def _unit_levels(s):
    return _floats(each=_float(0.0, 1.0))(s)


def _text(s):
    if not s:
        raise ValueError("must not be empty")
    return s


# ----------------------------------------------------------------- schema

@dataclass(frozen=True)
class Key:
    conv: object
    default: str | None  # raw text, parsed like user input; None means required


_TRAIN_KEYS = {
    "epochs": Key(_int(1), "5000"),
    "learning_rate": Key(_float(0.0, lo_open=True), "1e-3"),
    "beta1": Key(_float(0.0, 1.0, hi_open=True), "0.9"),
    "beta2": Key(_float(0.0, 1.0, hi_open=True), "0.999"),
    "collocation_count": Key(_int(1), "101"),
    "t_lo": Key(_float(), "0"),
    "t_hi": Key(_float(), "3"),
    "collocation_strategy": Key(_choice(STRATEGIES), "uniform-grid"),
    "possibility_M": Key(_float(1.0, lo_open=True), "10"),
    "rule_M": Key(_float(1.0), "5"),
    "early_stop": Key(_float(0.0), "1e-6"),
}

_ORACLE_KEYS = {
    "h": Key(_float(0.0, lo_open=True), "1e-3"),
    "k": Key(_int(2), "9"),
    "grid_points": Key(_int(2), "301"),
    "mc_samples": Key(_int(100), "2000"),
    "mc_workers": Key(_int(1), "1"),
}

# experiment -> (allowed presets, [problem] keys, overrides of other defaults)
_EXPERIMENTS = {
    "pinn-decay": (
        ("singular",),
        {"lambda": Key(_float(), "-0.5"), "x0": Key(_float(), "5")},
        {},
    ),
    "fcinn-decay": (
        ("possibility",),
        {
            "lambda": Key(_fuzzy, "-0.6, -0.5, -0.4"),
            "x0": Key(_float(), "5"),
            "mu_init": Key(_float(0.0, 1.0, True, True), "0.5"),
            "alpha_init": Key(_float(0.0, 1.0, True, True), "0.5"),
            "envelope_mu": Key(_unit_levels, "0, 0.5, 1"),
            "envelope_alpha": Key(_unit_levels, "0, 1"),
            "envelope_epochs": Key(_int(1), "5000"),
            "inflate": Key(_float(0.0), "5e-2"),
        },
        {("train", "epochs"): "2000"},
    ),
    "sinnet-oscillator": (
        ("sureness", "possibility", "probability"),
        {
            "zeta_fuzzy": Key(_fuzzy, "0.15, 0.2, 0.25"),
            "zeta_normal": Key(_normal, "0.2, 0.01"),
            "omega": Key(_float(0.0, lo_open=True), "2"),
            "x0": Key(_float(), "2"),
            "dx0": Key(_float(), "0"),
            "data_points": Key(_int(1), "16"),
            "data_zeta": Key(_float(0.0, 1.0, True, True), "0.2"),
            "mu_init": Key(_float(0.0, 1.0, True, True), "0.5"),
            "alpha_init": Key(_float(0.0, 1.0, True, True), "0.5"),
            "per_point": Key(_bool, "false"),
            "samples": Key(_int(1), "16"),
            "band_sigmas": Key(_float(0.0, lo_open=True), "3"),
        },
        {("train", "epochs"): "3000"},
    ),
    "finn-case1": (
        ("finn",),
        {
            "t_small": Key(_membership, "gaussian(0, 2.5)"),
            "t_large": Key(_membership, "gaussian(10, 2.5)"),
            "x_large": Key(_membership, "gaussian(8, 1.5)"),
            "x_medium": Key(_membership, "gaussian(5, 1.5)"),
            "data_t": Key(_floats(), "0, 5, 10"),
            "data_x": Key(_floats(), "8, 5.25, 5.02"),
        },
        {("train", "epochs"): "2000", ("train", "t_hi"): "10"},
    ),
    "finn-derivative-case2": (
        ("finn-derivative",),
        {
            "t_near_zero": Key(_membership, "gaussian(0, 2)"),
            "t_about_10": Key(_membership, "gaussian(10, 2)"),
            "dx_small": Key(_membership, "gaussian(0, 0.5)"),
            "dx_about_2": Key(_membership, "gaussian(2, 0.5)"),
            "data_t": Key(_floats(), "0"),
            "data_x": Key(_floats(), "0"),
        },
        {("train", "epochs"): "2000", ("train", "t_hi"): "10"},
    ),
    "finn-controller": (
        ("finn",),
        {
            "plant": Key(_choice(("first-order", "second-order")), "first-order"),
            "gain": Key(_float(), "1"),
            "tau": Key(_float(0.0, lo_open=True), "1"),
            "omega": Key(_float(0.0, lo_open=True), "1"),
            "zeta": Key(_float(0.0), "0.5"),
            "dt": Key(_float(0.0, lo_open=True), "0.01"),
            "horizon": Key(_int(1), "2000"),
            "reference": Key(_choice(("step", "sine", "ramp", "zero")), "step"),
            "amplitude": Key(_float(), "1"),
            "frequency": Key(_float(0.0, lo_open=True), "0.1"),
            "slope": Key(_float(), "0.1"),
            "error_scale": Key(_float(0.0, lo_open=True), "0.25"),
            "rate_scale": Key(_float(0.0, lo_open=True), "5"),
            "control_gain": Key(_float(0.0, lo_open=True), "5"),
            "train_steps": Key(_int(0), "1"),
            "tail": Key(_float(0.0, 1.0, True), "0.25"),
        },
        {("train", "learning_rate"): "1e-2", ("network", "hidden"): "16, 16"},
    ),
}

# training keys the controller actually consumes
_CONTROLLER_TRAIN = ("learning_rate", "rule_M")


def _schema(name: str) -> dict[str, dict[str, Key]]:
    presets, problem, overrides = _EXPERIMENTS[name]
    train = dict(_TRAIN_KEYS)
    if name == "finn-controller":
        train = {k: train[k] for k in _CONTROLLER_TRAIN}
    sections = {
        "experiment": {
            "name": Key(_choice(EXPERIMENT_NAMES), None),
            "preset": Key(_choice(presets), presets[0]),
            "seed": Key(_int(0), "0"),
        },
        "network": {"hidden": Key(_ints(1), "32, 32")},
        "train": train,
        "problem": dict(problem),
        "oracle": dict(_ORACLE_KEYS) if name != "finn-controller" else {},
        "output": {"dir": Key(_text, "runs")},
    }
    for (sec, key), raw in overrides.items():
        sections[sec][key] = replace(sections[sec][key], default=raw)
    return sections


# ----------------------------------------------------------------- parsing

@dataclass
class ExperimentConfig:
    name: str
    preset: str
    seed: int
    hidden: tuple[int, ...]
    train: TrainConfig | None
    problem: dict
    oracle: dict
    output_dir: str
    train_values: dict = field(default_factory=dict)
    entries: dict = field(default_factory=dict)  # (section, key) -> raw text as given

    def text(self) -> str:
        return render(self.entries)


_LINE = re.compile(r"^([A-Za-z_][\w.-]*)\s*=\s*(.*?)\s*$")
_SECTION = re.compile(r"^\[\s*([\w-]+)\s*\]$")


def _tokenize(text: str, errors: list[str]) -> dict:
    entries: dict[tuple[str, str], tuple[str, int]] = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = _SECTION.match(line)
        if m:
            section = m.group(1)
            if section not in SECTIONS:
                errors.append(f"line {n}: unknown section [{section}]; "
                              f"expected one of {', '.join(SECTIONS)}")
            continue
        m = _LINE.match(line)
        if not m:
            errors.append(f"line {n}: expected 'key = value' or '[section]', got {line!r}")
            continue
        if section is None:
            errors.append(f"line {n}: key {m.group(1)!r} appears before any [section]")
            continue
        k = (section, m.group(1))
        if k in entries:
            first = entries[k][1]
            errors.append(f"line {n}: duplicate key {section}.{k[1]} "
                          f"(lines {first} and {n})")
            continue
        entries[k] = (m.group(2), n)
    return entries


def parse_config(text: str) -> ExperimentConfig:
    """Validate ``text`` completely; raise :class:`ConfigError` with every problem."""
    errors: list[str] = []
    entries = _tokenize(text, errors)
    name_raw, name_line = entries.get(("experiment", "name"), (None, None))
    if name_raw is None:
        errors.append("line 0: missing required key experiment.name")
        raise ConfigError(errors)
    if name_raw not in _EXPERIMENTS:
        hint = difflib.get_close_matches(name_raw, EXPERIMENT_NAMES, 1)
        extra = f"; did you mean {hint[0]!r}?" if hint else ""
        errors.append(f"line {name_line}: unknown experiment {name_raw!r}{extra}")
        raise ConfigError(errors)
    schema = _schema(name_raw)

    values: dict[str, dict] = {s: {} for s in SECTIONS}
    for (sec, key), (raw, n) in entries.items():
        if sec not in schema:
            continue  # already reported
        key_def = schema[sec].get(key)
        if key_def is None:
            hint = difflib.get_close_matches(key, list(schema[sec]), 1)
            extra = f"; did you mean {hint[0]!r}?" if hint else ""
            errors.append(f"line {n}: unknown key {sec}.{key} for {name_raw}{extra}")
            continue
        try:
            values[sec][key] = key_def.conv(raw)
        except ValueError as exc:
            errors.append(f"line {n}: {sec}.{key}: {exc}")
    for sec, keys in schema.items():
        for key, key_def in keys.items():
            if key in values[sec] or (sec, key) in entries:
                continue
            values[sec][key] = key_def.conv(key_def.default)

    tv = values["train"]
    if "t_lo" in tv and "t_hi" in tv and not tv["t_lo"] < tv["t_hi"]:
        n = entries.get(("train", "t_hi"), entries.get(("train", "t_lo"), ("", 0)))[1]
        errors.append(f"line {n}: train.t_lo must be below train.t_hi")
    if errors:
        raise ConfigError(errors)

    ex = values["experiment"]
    train = None
    if name_raw != "finn-controller":
        train = TrainConfig(seed=ex["seed"], preset=ex["preset"], **tv)
    return ExperimentConfig(
        name=name_raw, preset=ex["preset"], seed=ex["seed"], hidden=values["network"]["hidden"],
        train=train, problem=values["problem"], oracle=values["oracle"],
        output_dir=values["output"]["dir"], train_values=dict(tv),
        entries={k: v[0] for k, v in entries.items()},
    )


def render(entries: dict) -> str:
    """Canonical text for ``{(section, key): raw}``, sections in fixed order."""
    lines = []
    for sec in SECTIONS:
        keys = [k for (s, k) in entries if s == sec]
        if not keys:
            continue
        if lines:
            lines.append("")
        lines.append(f"[{sec}]")
        lines += [f"{k} = {entries[(sec, k)]}" for k in keys]
    return "\n".join(lines) + "\n"


def override(cfg: ExperimentConfig, dotted: str, raw: str) -> ExperimentConfig:
    """A new config with ``section.key`` set to ``raw``, revalidated."""
    sec, _, key = dotted.partition(".")
    if not key:
        raise ConfigError([f"line 0: parameter {dotted!r} must look like section.key"])
    entries = dict(cfg.entries)
    entries[(sec, key)] = raw
    return parse_config(render(entries))
