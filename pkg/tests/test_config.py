import textwrap

import numpy as np
import pytest

from vanhove.config import load_config, parse_config
from vanhove.model import ConfigError, validate

EXPLICIT = """\
model:
  name: two-level
  lam: 0.2
  h_s: [[[0.5, 0], [0, 0]], [[0, 0], [-0.5, 0]]]
  w:   [[0, 1], [1, 0]]
  h_r: [[[0, 0], [0, 0]], [[0, 0], [1.3, 0]]]
  v:   [[[0, 0], [0.8, 0.1]], [[0.8, -0.1], [0, 0]]]
  omega_r: [[1, 0], [0, 0]]
  phi: {family: exponential, gamma: 0.64, tau_c: 1.0}
"""


def test_preset_config_defaults():
    cfg = parse_config("model: {preset: dephasing}\n")
    assert cfg.model.name == "dephasing"
    assert cfg.seed == 0
    assert cfg.sweep["lambda_grid"] and cfg.sweep["tau_grid"]
    assert cfg.clustering is None


def test_preset_params_and_lambda():
    cfg = parse_config("model:\n  preset: star-bath\n  params: {n_levels: 7}\n  lam: 0.3\nquadrature: {seed: 4}\n")
    assert cfg.model.d_r == 8 and cfg.model.lam == 0.3 and cfg.seed == 4


def test_explicit_matrices():
    cfg = parse_config(EXPLICIT)
    m = cfg.model
    assert m.name == "two-level" and m.lam == 0.2
    assert m.v[0, 1] == 0.8 + 0.1j and m.w[0, 1] == 1.0
    assert validate(m).passed
    assert m.phi_analytic.params["gamma"] == 0.64


def test_malformed_row_reports_line():
    text = EXPLICIT.replace("[[0, 1], [1, 0]]", "[[0, 1], [1, 0, 2]]")
    with pytest.raises(ConfigError, match=r"<string>:5: w row 1 has 3 entries"):
        parse_config(text)
    text = EXPLICIT.replace("[[[0, 0], [0, 0]], [[0, 0], [1.3, 0]]]", "[[[0, 0], [0, 0]],\n       [[0, 0], [1.3]]]")
    with pytest.raises(ConfigError, match=r":7: h_r row 1\[1\]"):
        parse_config(text)


@pytest.mark.parametrize(
    "text, msg",
    [
        ("model: {preset: nope}\n", "unknown preset"),
        ("model: {preset: dephasing, params: {bogus: 1}}\n", "bad preset parameters"),
        ("model: {preset: dephasing}\nsweep: {lambda_grid: []}\n", "lambda_grid"),
        ("model: {preset: dephasing}\nsweep: {tau_grid: [a]}\n", "tau_grid"),
        ("model: {preset: dephasing}\nsweep: {speed: 1}\n", "unknown sweep key"),
        ("model: {preset: dephasing}\nextra: 1\n", "unknown section"),
        ("quadrature: {seed: 1}\n", "missing model"),
        ("model: {h_s: [[1]]}\n", "missing h_r"),
        ("model: [1, 2\n", "malformed YAML"),
        ("", "empty"),
        ("model: {preset: dephasing}\nclustering: {f: {}}\n", "clustering needs C"),
        ("model: {preset: dephasing, params: {}}\nclustering: {C: -1}\n", "non-negative"),
    ],
)
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_clustering_sections():
    cfg = parse_config("model: {preset: dephasing}\nclustering: preset\n")
    assert cfg.clustering.C == 0.5
    cfg = parse_config("model: {preset: dephasing}\nclustering: {C: 2, f: {amplitude: 3, tau: 0.5}, epsilon: 0.25}\n")
    assert cfg.clustering.C == 2 and cfg.clustering.f_l1 == pytest.approx(3.0) and cfg.clustering.epsilon == 0.25
    with pytest.raises(ConfigError, match="no shipped certificate"):
        parse_config(EXPLICIT + "clustering: preset\n")


def test_load_config_file(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(textwrap.dedent(EXPLICIT))
    assert load_config(p).source == str(p)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")
