import json
import math

import pytest

import bellsim


def test_collapse_and_readout():
    t = bellsim.diosi_collapse_time(2e-6, 0.9e-9, 12.6e-9)
    assert 1.0e-6 <= t <= 1.1e-6
    assert bellsim.penrose_collapse_time(2e-6, 0.9e-9, 12.6e-9) == pytest.approx(t / 2)
    assert bellsim.displacement_from_fringe(633e-9, 2.4, 0.3) == pytest.approx(12.59e-9, abs=1e-11)
    with pytest.raises(bellsim.UndefinedCollapseError):
        bellsim.diosi_collapse_time(2e-6, 0.9e-9, 0.0)


def test_chsh():
    assert bellsim.s_from_visibility(0.905) == pytest.approx(2.560, abs=0.003)
    s, s_err, sigma = bellsim.bell_figures(0.905, 0.015)
    assert s_err == pytest.approx(0.042, abs=5e-4)
    assert 12 <= sigma <= 15
    assert bellsim.correlation(0.0, math.pi) == pytest.approx(-1.0)


def test_budget_preset():
    b = bellsim.budget("paper-2008")
    assert b["separated"]
    assert b["light_travel_time_s"] == pytest.approx(60.04e-6, abs=0.05e-6)
    assert "paper-2008" in bellsim.presets()


def test_fit_and_analyze():
    phases = [4 * math.pi * i / 40 for i in range(40)]
    counts = [30 * (1 + 0.9 * math.cos(p)) for p in phases]
    fit = bellsim.fit_fringe(phases, counts)
    assert fit["visibility"] == pytest.approx(0.9, abs=1e-9)
    with pytest.raises(bellsim.InsufficientSpanError):
        bellsim.fit_fringe(phases[:5], counts[:5])
    bell = json.loads(bellsim.analyze(phases, [round(c) for c in counts], 2.0))
    assert bell["v_net"] > bell["v_raw"]


def test_config_errors():
    with pytest.raises(bellsim.ConfigError, match="source.colour"):
        bellsim.scenario_text("base: paper-2008\nsource:\n  colour: red\n")
    assert bellsim.parse_quantity("600 ps", "time") == pytest.approx(600e-12)


def test_short_simulation_is_reproducible():
    text = "base: paper-2008\nduration: 4 min\nbin_width: 20 s\n"
    rows, report = bellsim.simulate(text, seed=3)
    rows2, report2 = bellsim.simulate(text, seed=3, workers=2)
    assert rows == rows2 and report == report2
    assert len(rows) == 12
    assert report["seed"] == 3
    assert 4500 < report["rates"]["singles_a_hz"] < 5500
