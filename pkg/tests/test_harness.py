import filecmp
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entroflow import stochastic
from entroflow.errors import ConfigError
from entroflow.harness import (
    Scenario,
    bundled_scenarios,
    load_scenario,
    parse_config_text,
    parse_scenario,
    run,
    scenario_text,
)


MINIMAL = """
id = "line-eternal"
model = "euclidean-line"
solution = "expline:1,1"
x = [0.0]
t.min = 0.25
t.max = 4.0
"""


def test_parse_minimal_scenario():
    sc = parse_scenario(MINIMAL)
    assert sc.id == "line-eternal"
    assert sc.kernel == "auto"
    assert sc.mc is None
    assert sc.t_count == 16


def test_round_trip_is_identity():
    sc = parse_scenario(MINIMAL)
    again = parse_scenario(scenario_text(sc))
    assert again == sc
    third = parse_scenario(scenario_text(again))
    assert third == again


def test_bundled_scenarios_all_parse():
    paths = bundled_scenarios()
    assert len(paths) >= 5
    for name, path in paths.items():
        sc = load_scenario(path)
        assert parse_scenario(scenario_text(sc)) == sc


def test_grammar_values():
    m = parse_config_text(
        's = "a,b"\nn = 3\nf = 1.5e-3\nflag = true\nxs = [1, 2.5]\nss = ["a", "b"]\n'
        "# comment\nc = 1 # trailing\n"
    )
    assert m == {
        "s": "a,b", "n": 3, "f": 1.5e-3, "flag": True,
        "xs": [1, 2.5], "ss": ["a", "b"], "c": 1,
    }


@given(
    a=st.floats(0.1, 5.0, allow_nan=False),
    b=st.floats(-3.0, 3.0, allow_nan=False),
    tmin=st.floats(0.1, 0.5),
    count=st.integers(2, 32),
    spacing=st.sampled_from(["log", "linear"]),
)
@settings(max_examples=30, deadline=None)
def test_round_trip_property(a, b, tmin, count, spacing):
    sc = Scenario(
        id="prop", model="euclidean-line", solution=f"expline:{a:g},{b:g}",
        x=(0.0,), t_min=tmin, t_max=4.0, t_count=count, t_spacing=spacing,
    )
    sc.validate()
    assert parse_scenario(scenario_text(sc)) == sc


def test_validation_errors():
    with pytest.raises(ConfigError):
        parse_scenario(MINIMAL.replace('"euclidean-line"', '"nope"'))
    with pytest.raises(ConfigError):
        parse_scenario(MINIMAL.replace("t.max = 4.0", "t.max = 99.0"))
    with pytest.raises(ConfigError):
        parse_scenario(MINIMAL.replace("t.min = 0.25", "t.min = 0.0"))
    with pytest.raises(ConfigError):
        parse_scenario(MINIMAL + 'unknown.key = 1\n')
    with pytest.raises(ConfigError):
        parse_scenario(MINIMAL + 'analyses = ["nope"]\n')
    # the shrinking-circle window bound is enforced
    bad = """
id = "bad-window"
model = "circle:1,-0.1"
window.min = 0.0
window.max = 1.25
solution = "circle-spec:2,(1,0.5,0)"
x = [0.0]
t.min = 0.5
t.max = 3.0
"""
    with pytest.raises(ConfigError) as err:
        parse_scenario(bad)
    assert "window" in str(err.value)


def test_duplicate_and_malformed_lines():
    with pytest.raises(ConfigError):
        parse_config_text("a = 1\na = 2\n")
    with pytest.raises(ConfigError):
        parse_config_text("just words\n")
    with pytest.raises(ConfigError):
        parse_config_text("a = [1, 2\n")


def test_run_pipeline_and_reproducibility(tmp_path):
    text = """
id = "tiny"
model = "euclidean-line"
solution = "expline:1,1"
kernel = "auto"
x = [0.0]
t.min = 0.25
t.max = 2.5
t.count = 8
t.spacing = "log"
mc.paths = 2000
mc.dt = 0.001
mc.seed = 12648430
domains = ["interval:-1,1", "interval:-2,2"]
analyses = ["entropy-curve", "conditions", "local", "bounds", "classify", "separation"]
"""
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(text)
    out1 = tmp_path / "out1"
    out2 = tmp_path / "out2"
    man1 = run(cfg, out1)
    man2 = run(cfg, out2)
    assert set(man1.outputs) == {
        "entropy.csv", "entropy_mc.csv", "local.csv", "analysis.json"
    }
    for name in man1.outputs:
        assert filecmp.cmp(out1 / name, out2 / name, shallow=False), name
    assert (out1 / "manifest.json").exists()
    assert man1.seed == 12648430
    header = (out1 / "entropy.csv").read_text().splitlines()[0]
    assert header.startswith(
        "t,E,E_stderr,Eprime,Eprime_stderr,Esecond,Esecond_stderr,cond1,cond2,cond0a,method"
    )
    header = (out1 / "local.csv").read_text().splitlines()[0]
    assert header == "domain_index,t,E_D,stderr,censored_frac"


def test_run_overrides(tmp_path):
    cfg = bundled_scenarios()["line_eternal"]
    out = tmp_path / "out"
    man = run(cfg, out, overrides={"paths": 500, "seed": 99, "refine": 1})
    assert man.seed == 99
    assert man.refinement_level == 1


def test_wrong_diffusion_scale_fails_the_marginal_law(line_model, monkeypatch):
    # negative control: remove the factor-of-two speedup and the marginal
    # law check must reject the samples
    import entroflow.stochastic as stoch
    from scipy import stats

    original = stoch._advance

    def slowed(model, scheme, states, t, dt, xi, blown):
        return original(model, scheme, states, t, dt / 2.0, xi, blown)

    monkeypatch.setattr(stoch, "_advance", slowed)
    cfg = stochastic.SdeConfig(dt=1e-3, n_paths=20_000, seed=4)
    ens = stoch.simulate(line_model, [0.0], 0.5, cfg, record_times=[0.5])
    ks = stats.kstest(ens.state_at(0.5)[:, 0], stats.norm(scale=math.sqrt(1.0)).cdf)
    assert ks.statistic > 1.6276 / math.sqrt(20_000)


def test_cli_entry_points(tmp_path, capsys):
    from entroflow.cli import main

    assert main(["list-models"]) == 0
    assert main(["list-solutions"]) == 0
    out = capsys.readouterr().out
    assert "euclidean-line" in out and "expline:a,b" in out

    cfg = tmp_path / "t.cfg"
    cfg.write_text(MINIMAL + 'analyses = ["entropy-curve"]\n')
    code = main(["run", str(cfg), "-o", str(tmp_path / "o"), "--refine", "1"])
    assert code == 0
    assert (tmp_path / "o" / "entropy.csv").exists()
    assert (tmp_path / "o" / "manifest.json").exists()
