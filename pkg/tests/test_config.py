import numpy as np
import pytest
import yaml

from snnpde.config import (
    ConfigFileError,
    load_config,
    load_sweep,
    parse_dict,
    parse_sweep,
    parse_text,
    preset,
    preset_names,
    presets,
    resolve_config,
    set_path,
    sweep_names,
)
from snnpde.errors import ConfigurationError

TINY = """\
description: tiny helmholtz run
problem: {name: helmholtz1d}
method: snn-d
network: {depth: 1, width: 5, M: 6, seed: 3}
training: {epsilon: 1.0e-3, n_max: 5}
collocation: {grid: 20, inclusive: true}
"""


def test_presets_listing():
    names = preset_names()
    assert "helmholtz-snnd" in names and "anisotropic-snni" in names
    problems = {"helmholtz", "poisson", "advection", "parabolic", "anisotropic"}
    for p in problems:
        assert f"{p}-snnd" in names and f"{p}-snni" in names
    assert all(desc for _, desc in presets())


@pytest.mark.parametrize("name", preset_names())
def test_preset_round_trip(name):
    cfg = preset(name)
    again = parse_text(cfg.dumps())
    assert again == cfg
    assert parse_dict(yaml.safe_load(cfg.dumps())).to_dict() == cfg.to_dict()


def test_preset_defaults():
    cfg = preset("helmholtz-snnd")
    assert (cfg.network.depth, cfg.network.width, cfg.network.M, cfg.network.seed) == (4, 100, 300, 1)
    assert (cfg.training.epsilon, cfg.training.n_max) == (1e-3, 5000)
    assert cfg.network.hidden_widths == (100,) * 4
    assert preset("helmholtz-elm").network.hidden_widths == ()
    assert preset("advection-snnd-boundary-loss").training.include_boundary_loss


def test_missing_quadrature_names_field():
    text = TINY.replace("method: snn-d", "method: snn-i")
    with pytest.raises(ConfigFileError) as exc:
        parse_text(text)
    assert exc.value.field == "quadrature"
    assert "quadrature" in str(exc.value)


def test_line_anchored_errors(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(TINY.replace("n_max: 5", "n_max: -5"))
    with pytest.raises(ConfigFileError) as exc:
        load_config(path)
    assert exc.value.field == "training.n_max"
    assert exc.value.line == 5
    assert str(exc.value).startswith(f"{path}:5: training.n_max:")
    with pytest.raises(ConfigFileError) as exc:
        parse_text(TINY + "colour: blue\n")
    assert exc.value.line == 7
    with pytest.raises(ConfigFileError) as exc:
        parse_text("problem: [unclosed\n")
    assert exc.value.line is not None


@pytest.mark.parametrize(
    "edit",
    [
        ("helmholtz1d", "wave"),
        ("method: snn-d", "method: ritz"),
        ("epsilon: 1.0e-3", "epsilon: 0"),
        ("epsilon: 1.0e-3", "epsilon: 2"),
        ("seed: 3", "seed: -1"),
        ("grid: 20", "grid: 1"),
        ("width: 5", "heads: 5"),
        ("inclusive: true", "inclusive: maybe"),
    ],
)
def test_validation_errors(edit):
    with pytest.raises(ConfigurationError):
        parse_text(TINY.replace(*edit))


def test_elm_needs_depth_zero_and_group_names():
    with pytest.raises(ConfigFileError) as exc:
        parse_text(TINY.replace("method: snn-d", "method: elm"))
    assert exc.value.field == "network.depth"
    with pytest.raises(ConfigFileError) as exc:
        parse_text(TINY.replace("inclusive: true", "inclusive: true, group_per_face: {top: 3}"))
    assert "group_per_face" in exc.value.field


def test_numeric_strings_and_overrides():
    cfg = parse_text(TINY.replace("epsilon: 1.0e-3", "epsilon: 1e-3"))
    assert cfg.training.epsilon == 1e-3
    assert cfg.with_seed(9).network.seed == 9
    assert cfg.with_overrides({"network": {"M": 11}}).network.M == 11
    tree = set_path({"problem": {"name": "anisotropic2d", "params": {"k1": 1.0}}}, "problem.params", {"k2": 5.0})
    assert tree["problem"]["params"] == {"k1": 1.0, "k2": 5.0}


def test_resolve_config(tmp_path):
    cfg, name = resolve_config("poisson-snni")
    assert name == "poisson-snni" and cfg.integral
    path = tmp_path / "mine.yaml"
    path.write_text(TINY)
    cfg, name = resolve_config(str(path))
    assert name == "mine" and cfg.network.M == 6
    with pytest.raises(ConfigurationError):
        resolve_config("no-such-preset")


SWEEP_SHAPES = {
    "helmholtz-snnd-points-vs-M": 48,
    "helmholtz-snni-points-vs-M": 48,
    "helmholtz-snnd-depth-vs-M": 27,
    "poisson-snnd-points-vs-M": 42,
    "poisson-snni-points-vs-M": 42,
    "anisotropic-ratios": 28,
    "anisotropic-scaled-pairs": 14,
    "helmholtz-methods": 5,
}


@pytest.mark.parametrize("name,count", sorted(SWEEP_SHAPES.items()))
def test_shipped_sweep_shapes(name, count):
    assert len(load_sweep(name).configs()) == count


def test_all_sweeps_parse():
    assert len(sweep_names()) >= 16
    for n in sweep_names():
        assert load_sweep(n).configs()


def test_anisotropy_sweep_cells():
    cells = load_sweep("anisotropic-ratios").configs()
    ratios = sorted({c.problem.params["k2"] for _, c in cells})
    np.testing.assert_allclose(ratios, [10.0**k for k in range(7)])
    methods = {c.method for _, c in cells}
    assert {"snn-d", "snn-i"} <= methods
    for k2 in ratios:
        assert len([c for _, c in cells if c.problem.params["k2"] == k2]) == len(methods)
    pairs = load_sweep("anisotropic-scaled-pairs").configs()
    for _, c in pairs:
        np.testing.assert_allclose(c.problem.params["k1"] / c.problem.params["k2"], 1e6, rtol=1e-12)


def test_sweep_order_and_validation():
    spec = parse_sweep("base: poisson-snnd\naxes:\n  collocation.grid: [8, 12]\n  network.M: [5, 6, 7]\n")
    got = [(c.collocation.grid, c.network.M) for _, c in spec.configs()]
    assert got == [(8, 5), (8, 6), (8, 7), (12, 5), (12, 6), (12, 7)]
    with pytest.raises(ConfigFileError):
        parse_sweep("base: poisson-snnd\naxes: {}\n")
    with pytest.raises(ConfigFileError):
        parse_sweep("base: poisson-snnd\naxes:\n  network.M: [0]\n")
    with pytest.raises(ConfigFileError):
        parse_sweep("axes:\n  network.M: [3]\n")
