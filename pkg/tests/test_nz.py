import numpy as np
import pytest

from conftest import random_density, random_matrix
from vanhove.model import SystemBathModel, make_preset, system_liouvillian
from vanhove.nz import build_projections, decompose_liouvillian, verify_projection_algebra
from vanhove.opcore import apply, commutator_superop, partial_trace_R, superop_norm_estimate, trace_norm


def test_projection_identities(models, pairs):
    for name, pair in pairs.items():
        assert all(r <= 1e-12 for r in pair.residuals().values()), name


def test_projection_action(models, pairs, rng):
    m, pair = models["random"], pairs["random"]
    sigma = random_density(rng, m.d_s)
    prod = np.kron(sigma, m.omega_state)
    assert np.allclose(apply(pair.P, prod), prod)
    rho = random_density(rng, m.d)
    expected = np.kron(partial_trace_R(rho, m.d_s, m.d_r), m.omega_state)
    assert np.abs(apply(pair.P, rho) - expected).max() <= 1e-12
    assert np.abs(apply(pair.P, apply(pair.P, rho)) - apply(pair.P, rho)).max() <= 1e-12


def test_ran_p_isometric(models, pairs, rng):
    m, pair = models["star-bath"], pairs["star-bath"]
    for _ in range(5):
        x = random_matrix(rng, m.d)
        assert abs(trace_norm(apply(pair.P, x)) - trace_norm(partial_trace_R(x, m.d_s, m.d_r))) <= 1e-12


def test_algebra_on_presets(models, pairs):
    for name, m in models.items():
        rep = verify_projection_algebra(m, pairs[name])
        assert rep.passed, (name, rep.failures())
        assert rep.residuals["L_R omega_R"] == 0.0 or rep.residuals["L_R omega_R"] <= 1e-12


def test_shifted_v_breaks_p_lsr_p(models):
    m = models["dephasing"]
    c = 0.3
    shifted = m.replace(v=m.v + c * np.eye(m.d_r))
    rep = verify_projection_algebra(shifted, build_projections(shifted))
    assert rep.failures() == ["P L_SR P"]
    expected = c * superop_norm_estimate(commutator_superop(m.w))
    assert rep.residuals["P L_SR P"] == pytest.approx(expected, rel=1e-10)
    assert abs(rep.centering) == pytest.approx(c)


def test_decomposition_reassembles(models, pairs):
    for name in ("random", "parity"):
        m, pair = models[name], pairs[name]
        blocks = decompose_liouvillian(m, pair)
        from vanhove.model import liouvillian_parts

        total = liouvillian_parts(m).total
        assert np.abs(sum(blocks.values()) - total).max() <= 1e-10
        assert np.abs(pair.P @ blocks["lam QL_SRQ"] @ pair.P).max() <= 1e-14


def test_decomposition_at_zero_coupling(models, pairs):
    m = models["random"].with_lambda(0.0)
    blocks = decompose_liouvillian(m, pairs["random"])
    for k in ("lam QL_SRQ", "lam PL_SRQ", "lam QL_SRP"):
        assert not blocks[k].any()
    assert np.abs(blocks["PL_SP"] - pairs["random"].P @ system_liouvillian(m) @ pairs["random"].P).max() == 0
