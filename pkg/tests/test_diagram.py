import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, sorted_times
from vanhove.diagram import (
    NoncrossingPartition,
    diagram_integrand,
    diagram_integrand_reduced,
    diagram_terms,
    enumerate_nc,
    g_n,
    k_n_combinatorial,
    nc_count,
    rearrange,
    render_diagram,
    verify_pqp_expansion,
)
from vanhove.dyson import dyson_integrand, dyson_integrand_reduced, k_n_bruteforce
from vanhove.model import make_preset
from vanhove.nz import build_projections
from vanhove.quadrature import simplex_grid


def exhaustive_nc(n):
    """Interval partitions of (0..n) with blocks >= 2, by trying every set of cut points."""
    out = set()
    for cuts in itertools.product((0, 1), repeat=n):
        blocks, cur = [], [0]
        for k, c in enumerate(cuts, start=1):
            if c:
                blocks.append(tuple(cur))
                cur = []
            cur.append(k)
        blocks.append(tuple(cur))
        if all(len(b) >= 2 for b in blocks):
            out.add(tuple(blocks))
    return out


def test_nc_examples():
    assert [d.blocks for d in enumerate_nc(2)] == [((0, 1, 2),)]
    assert {d.blocks for d in enumerate_nc(3)} == {((0, 1, 2, 3),), ((0, 1), (2, 3))}
    nc7 = {d.blocks for d in enumerate_nc(7)}
    assert ((0, 1), (2, 3, 4), (5, 6, 7)) in nc7
    assert ((0, 1, 2), (3, 4, 5), (6, 7)) in nc7
    assert len(enumerate_nc(4)) == 3
    with pytest.raises(ValueError):
        enumerate_nc(0)


@pytest.mark.parametrize("n", range(1, 13))
def test_nc_complete_and_counted(n):
    got = [d.blocks for d in enumerate_nc(n)]
    assert len(got) == len(set(got))
    assert set(got) == exhaustive_nc(n)
    assert nc_count(n) == len(got)


def test_nc_count_is_fibonacci():
    fib = [1, 1]
    while len(fib) < 15:
        fib.append(fib[-1] + fib[-2])
    # compositions of n+1 into parts >= 2 number F(n)
    assert [nc_count(n) for n in range(1, 13)] == fib[:12]


def test_partition_validation():
    with pytest.raises(ValueError, match=">= 2"):
        NoncrossingPartition.parse("0/1-2")
    with pytest.raises(ValueError, match=">= 2"):
        NoncrossingPartition(2, ((0,), (1, 2)))
    with pytest.raises(ValueError):
        NoncrossingPartition(3, ((0, 1), (3, 2)))
    d = NoncrossingPartition.parse("0-1/2-5")
    assert d.blocks == ((0, 1), (2, 3, 4, 5)) and d.lengths == (2, 4) and str(d) == "(0,1)(2,3,4,5)"


def test_rearrange_examples():
    A = {1, 3, 5, 6}
    assert rearrange((0, 1), A) == (1, 0)
    assert rearrange((5, 6, 7, 8), A) == (5, 6, 8, 7)
    assert rearrange((2, 3, 4), set()) == (4, 3, 2)


@settings(max_examples=50, deadline=None)
@given(lo=st.integers(0, 5), length=st.integers(2, 6), A=st.sets(st.integers(0, 12)))
def test_rearrange_properties(lo, length, A):
    block = tuple(range(lo, lo + length))
    assert rearrange(block, set(block)) == block
    assert rearrange(block, set()) == block[::-1]
    r = rearrange(block, A)
    assert sorted(r) == list(block)


def test_g_examples(models, rng):
    m = models["random"]
    z = sorted_times(rng, 1)
    from vanhove.model import heisenberg_V

    V = [heisenberg_V(m, zk) for zk in z]
    om = m.omega_r
    tr = lambda *ks: om.conj() @ np.linalg.multi_dot([V[k] for k in ks] + [np.eye(m.d_r)]) @ om
    for A in [(), (1,), (0, 2), (0, 1, 2)]:
        assert abs(g_n(m, A, z) - tr(*rearrange((0, 1, 2), A))) <= 1e-13
    z = sorted_times(rng, 2)
    V = [heisenberg_V(m, zk) for zk in z]
    expected = tr(3, 2, 1, 0) - tr(3, 2) * tr(1, 0)
    assert abs(g_n(m, (), z) - expected) <= 1e-13
    zero_v = m.replace(v=np.zeros_like(m.v))
    assert g_n(zero_v, (1, 2), z) == 0


def test_g_at_coincident_times_is_moment_sum(models):
    m = models["star-bath"]
    om = m.omega_r
    mom = lambda k: om.conj() @ np.linalg.matrix_power(m.v, k) @ om
    for n in (1, 2, 3, 4):
        expected = sum((-1) ** (d.size + 1) * np.prod([mom(len(b)) for b in d.blocks]) for d in enumerate_nc(n + 1))
        for A in [(), (0, n + 1), tuple(range(n + 2))]:
            assert abs(g_n(m, A, np.zeros(n + 2)) - expected) <= 1e-12


def test_g_rejects_large_order(models):
    with pytest.raises(ValueError):
        g_n(models["dephasing"], (), np.zeros(9))


@pytest.mark.parametrize("name", ["dephasing", "star-bath", "parity", "random"])
def test_integrand_identity(models, pairs, rng, name):
    m = models[name]
    for n in (1, 2, 3):
        z = sorted_times(rng, n, size=20)
        a = dyson_integrand_reduced(m, z)
        b = diagram_integrand_reduced(m, z)
        scale = max(np.abs(a).max(), (m.w_norm * m.v_norm) ** (n + 2))
        assert np.abs(a - b).max() <= 1e-10 * scale
    z = sorted_times(rng, 2)
    assert np.abs(dyson_integrand(m, pairs[name], z) - diagram_integrand(m, pairs[name], z)).max() <= 1e-12


def test_identity_weight_collapses(rng):
    m = make_preset("random")
    m = m.replace(w=np.eye(m.d_s))
    for n in (1, 2):
        z = sorted_times(rng, n)
        total = sum(t.coefficient[0] for t in diagram_terms(m, z))
        assert abs(total) <= 1e-12
        assert np.abs(diagram_integrand_reduced(m, z)).max() <= 1e-12


def test_diagram_terms_order(models, rng):
    m = models["random"]
    z = sorted_times(rng, 1)
    terms = {t.A: t for t in diagram_terms(m, z)}
    from vanhove.model import heisenberg_W

    W = [heisenberg_W(m, zk) for zk in z]
    sigma = random_density(rng, 2)
    t = terms[(1,)]
    expected = t.coefficient[0] * W[2] @ W[0] @ sigma @ W[1]
    assert np.abs(t.apply(sigma)[0] - expected).max() <= 1e-13


def test_kn_combinatorial_matches_bruteforce(models, pairs):
    for name in ("dephasing", "random"):
        m, pair = models[name], pairs[name]
        for n in (1, 2):
            grid = simplex_grid(n + 1, 1.3, 8)
            a = k_n_bruteforce(m, pair, n, 1.3, grid)
            b = k_n_combinatorial(m, pair, n, 1.3, grid)
            assert np.abs(a - b).max() <= 1e-10


def test_kn_combinatorial_zero_cases(models, pairs):
    assert np.abs(k_n_combinatorial(models["parity"], pairs["parity"], 1, 2.0)).max() <= 1e-9
    m = models["random"].replace(w=np.zeros((2, 2)))
    assert not k_n_combinatorial(m, pairs["random"], 2, 1.0, reduced=True).any()


def test_pqp_expansion(rng):
    for seed in (1, 2):
        m = make_preset("random", seed=seed)
        pair = build_projections(m)
        for n in (1, 2, 3):
            for z in sorted_times(rng, n, size=4):
                assert verify_pqp_expansion(m, pair, n, z) <= 1e-10


FIG_TERM = """\
n = 4   A = {2,4}   d = (0,1)(2,3,4,5)
W rail  W5 W3 W1 W0 [sigma] W2 W4
time   0    1    2    3    4    5
side   L    L    R    L    R    L
V arcs +----+    +----+----+----+
block  1    1    2    2    2    2
d_1^A = (1,0)   tr(V1 V0 omega_R)
d_2^A = (2,4,5,3)   tr(V2 V4 V5 V3 omega_R)
signs   (-1)^|A| = +1   (-1)^(|d|+1) = -1
"""


def test_render_golden():
    d = NoncrossingPartition(5, ((0, 1), (2, 3, 4, 5)))
    assert render_diagram(4, {2, 4}, d) == FIG_TERM
    assert render_diagram(4, [4, 2], ((0, 1), (2, 3, 4, 5))) == FIG_TERM


def test_render_minimal():
    out = render_diagram(1, (), NoncrossingPartition.parse("0-2"))
    assert "W2 W1 W0 [sigma]" in out
    assert "d_1^A = (2,1,0)" in out
    with pytest.raises(ValueError):
        render_diagram(1, (5,), NoncrossingPartition.parse("0-2"))
