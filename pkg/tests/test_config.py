from pathlib import Path

import pytest

from prinn.config import EXPERIMENT_NAMES, ConfigError, override, parse_config, render
from prinn.fuzzy import TriangularFuzzyNumber

MINIMAL = "[experiment]\nname = pinn-decay\n"


def errors_of(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.errors


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.name == "pinn-decay" and cfg.preset == "singular"
    assert cfg.seed == 0 and cfg.train.seed == 0
    assert cfg.hidden == (32, 32)
    assert cfg.problem == {"lambda": -0.5, "x0": 5.0}
    assert cfg.train.t_lo == 0.0 and cfg.train.t_hi == 3.0


@pytest.mark.parametrize("name", EXPERIMENT_NAMES)
def test_every_experiment_parses_with_defaults(name):
    cfg = parse_config(f"[experiment]\nname = {name}\n")
    assert cfg.name == name
    assert (cfg.train is None) == (name == "finn-controller")


def test_bad_fuzzy_triple_reports_its_line():
    text = "[experiment]\nname = fcinn-decay\n\n[problem]\nlambda = 0.05, 0.65, 0.1\n"
    (err,) = errors_of(text)
    assert err.startswith("line 5:") and "not nondecreasing" in err


def test_duplicate_key_lists_both_lines():
    text = "[experiment]\nname = pinn-decay\n[train]\nepochs = 10\n# again\nepochs = 20\n"
    (err,) = errors_of(text)
    assert "duplicate key train.epochs" in err and "lines 4 and 6" in err


def test_all_errors_are_collected():
    text = "\n".join([
        "[experiment]",
        "name = sinnet-oscillator",
        "[problem]",
        "zeta_normal = 0.2, 0",
        "zeta_fuzzy = 0.3, 0.2, 0.25",
        "omgea = 2",
        "[train]",
        "epochs = -3",
        "[plot]",
    ])
    errs = errors_of(text)
    assert len(errs) == 5
    joined = "\n".join(errs)
    assert "line 4:" in joined and "variance must be positive" in joined
    assert "line 5:" in joined and "not nondecreasing" in joined
    assert "line 6:" in joined and "did you mean 'omega'" in joined
    assert "line 8:" in joined
    assert "line 9: unknown section [plot]" in joined


def test_unknown_experiment_suggests_a_name():
    (err,) = errors_of("[experiment]\nname = pinn-decy\n")
    assert err.startswith("line 2:") and "did you mean 'pinn-decay'" in err
    (err,) = errors_of("[train]\nepochs = 3\n")
    assert "experiment.name" in err


def test_range_checks_and_cross_checks():
    errs = errors_of("[experiment]\nname = pinn-decay\n[train]\nt_lo = 2\nt_hi = 1\n")
    assert any("t_lo must be below" in e for e in errs)
    errs = errors_of("[experiment]\nname = fcinn-decay\n[problem]\nmu_init = 1\n")
    assert errs[0].startswith("line 4:")
    errs = errors_of("[experiment]\nname = pinn-decay\n[oracle]\nmc_samples = 50\n")
    assert errs[0].startswith("line 4:")
    errs = errors_of("[experiment]\nname = pinn-decay\npreset = sureness\n")
    assert errs[0].startswith("line 3:")


def test_key_before_section_and_garbage_lines():
    errs = errors_of("epochs = 3\n[experiment]\nname = pinn-decay\nthis is not a pair\n")
    assert errs[0].startswith("line 1:") and errs[1].startswith("line 4:")


def test_controller_rejects_training_keys_it_ignores():
    errs = errors_of("[experiment]\nname = finn-controller\n[train]\nepochs = 10\n")
    assert "unknown key train.epochs" in errs[0]


def test_values_are_typed():
    cfg = parse_config("[experiment]\nname = fcinn-decay\nseed = 4\n[network]\nhidden = 8, 8\n"
                       "[problem]\nlambda = -0.7, -0.5, -0.3\n")
    assert cfg.problem["lambda"] == TriangularFuzzyNumber(-0.7, -0.5, -0.3)
    assert cfg.hidden == (8, 8) and cfg.seed == 4


def test_render_round_trip_and_override():
    cfg = parse_config("[train]\nepochs = 7\n[experiment]\nname = pinn-decay\n")
    again = parse_config(cfg.text())
    assert again.entries == cfg.entries
    assert cfg.text().startswith("[experiment]\n")
    changed = override(cfg, "train.learning_rate", "0.01")
    assert changed.train.learning_rate == 0.01 and changed.train.epochs == 7
    with pytest.raises(ConfigError):
        override(cfg, "learning_rate", "0.01")
    with pytest.raises(ConfigError):
        override(cfg, "train.learning_rate", "-1")
    assert render({("output", "dir"): "x"}) == "[output]\ndir = x\n"


@pytest.mark.parametrize("name", EXPERIMENT_NAMES)
def test_shipped_configs_spell_out_the_defaults(name):
    path = Path(__file__).resolve().parents[1] / "configs" / f"{name}.txt"
    full = parse_config(path.read_text())
    bare = parse_config(f"[experiment]\nname = {name}\n")
    assert (full.problem, full.oracle, full.train_values, full.hidden, full.preset) == \
        (bare.problem, bare.oracle, bare.train_values, bare.hidden, bare.preset)
