"""Arithmetic layer: quaternion generators, Cayley graphs, Sym^p reps."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bundlelab.arithmetic import (ArithmeticError_, cayley_bundle,
                                  cayley_graph, legendre, projective_matrix,
                                  quaternion_generators, sqrt_minus_one,
                                  su2_character, su2_of, sym_rep,
                                  zero_one_check)
from bundlelab.bundles import haar_unitary, laplacian_matrix
from bundlelab.graphs import injectivity_radius


def _su2(rng):
    g = haar_unitary(2, rng)
    return g / np.sqrt(np.linalg.det(g))


def test_generators_p5():
    gens = quaternion_generators(5)
    assert len(gens) == 6
    quads = {(a.a0, a.a1, a.a2, a.a3) for a in gens}
    assert quads == {(1, 2, 0, 0), (1, -2, 0, 0), (1, 0, 2, 0),
                     (1, 0, -2, 0), (1, 0, 0, 2), (1, 0, 0, -2)}


def test_generators_p13():
    gens = quaternion_generators(13)
    assert len(gens) == 14
    with_three = [a for a in gens if a.a0 == 3]
    assert len(with_three) == 6
    assert all(a.norm() == 13 for a in gens)


def test_generators_counts():
    for p0 in (5, 13, 17, 29):
        assert len(quaternion_generators(p0)) == p0 + 1


def test_generators_closed_under_conjugation():
    gens = quaternion_generators(13)
    assert all(a.conjugate() in gens for a in gens)


def test_generators_reject_bad_prime():
    with pytest.raises(ArithmeticError_):
        quaternion_generators(7)  # 3 mod 4
    with pytest.raises(ArithmeticError_):
        quaternion_generators(15)


def test_sqrt_minus_one():
    assert sqrt_minus_one(5) == 2
    assert sqrt_minus_one(13) == 5
    assert sqrt_minus_one(17) == 4
    with pytest.raises(ArithmeticError_):
        sqrt_minus_one(7)


def test_legendre():
    assert legendre(13, 5) == -1
    assert legendre(5, 13) == -1
    assert legendre(13, 17) == 1
    with pytest.raises(ArithmeticError_):
        legendre(3, 4)


def test_projective_matrix_example():
    a = next(g for g in quaternion_generators(5)
             if (g.a0, g.a1, g.a2, g.a3) == (1, 2, 0, 0))
    m = projective_matrix(a, 13)
    # [[1 + 5*2, 0], [0, 1 - 5*2]] = [[11, 0], [0, 4]] canonicalized by 11^{-1} = 6
    assert m == (1, 0, 0, (4 * 6) % 13)


def test_projective_det_is_p0():
    b = sqrt_minus_one(13)
    for a in quaternion_generators(5):
        m = ((a.a0 + b * a.a1) % 13, (a.a2 + b * a.a3) % 13,
             (-a.a2 + b * a.a3) % 13, (a.a0 - b * a.a1) % 13)
        assert (m[0] * m[3] - m[1] * m[2]) % 13 == 5 % 13


def test_projective_conjugate_is_inverse_class():
    p1 = 13
    for a in quaternion_generators(5):
        m = projective_matrix(a, p1)
        mc = projective_matrix(a.conjugate(), p1)
        prod = (m[0] * mc[0] + m[1] * mc[2]) % p1, \
               (m[0] * mc[1] + m[1] * mc[3]) % p1, \
               (m[2] * mc[0] + m[3] * mc[2]) % p1, \
               (m[2] * mc[1] + m[3] * mc[3]) % p1
        # product is a scalar matrix
        assert prod[1] == 0 and prod[2] == 0 and prod[0] == prod[3]


def test_su2_of():
    a = next(g for g in quaternion_generators(5)
             if (g.a0, g.a1, g.a2, g.a3) == (1, 2, 0, 0))
    g = su2_of(a, 5)
    expected = np.diag([(1 + 2j), (1 - 2j)]) / math.sqrt(5)
    assert np.allclose(g, expected)
    assert abs(np.linalg.det(g) - 1) < 1e-12
    gc = su2_of(a.conjugate(), 5)
    assert np.allclose(gc, np.linalg.inv(g), atol=1e-12)


def test_cayley_graph_sizes():
    g = cayley_graph(13, 5)
    assert (g.vertex_count, g.degree) == (120, 14)
    assert getattr(g, "_cayley_meta")["group"] == "PGL2"
    assert getattr(g, "_cayley_meta")["bipartite"] is True

    g = cayley_graph(5, 13)
    assert (g.vertex_count, g.degree) == (2184, 6)
    assert getattr(g, "_cayley_meta")["group"] == "PGL2"

    g = cayley_graph(13, 17)
    assert (g.vertex_count, g.degree) == (2448, 14)
    assert getattr(g, "_cayley_meta")["group"] == "PSL2"


def test_cayley_rejects_equal_primes():
    with pytest.raises(ArithmeticError_):
        cayley_graph(5, 5)


def test_cayley_vertex_transitive_spot_check():
    g = cayley_graph(13, 5)
    injs = {injectivity_radius(g, x) for x in (0, 17, 39, 77, 119)}
    assert len(injs) == 1


def test_cayley_warn_small_p1():
    messages = []
    cayley_graph(13, 5, warn=messages.append)
    assert messages and "2 sqrt" in messages[0]


def test_cayley_bundle_dims():
    b = cayley_bundle(13, 5, 1)
    assert b.fiber_dim == 2
    assert b.total_dim == 240
    assert laplacian_matrix(b).shape == (240, 240)
    b0 = cayley_bundle(13, 5, 0)
    # p = 0 is the trivial line bundle: Laplacian = Cayley adjacency
    assert np.allclose(laplacian_matrix(b0).imag, 0, atol=1e-15)
    assert np.allclose(np.abs(laplacian_matrix(b0).real).sum(axis=1), 14)


def test_sym_rep_p0_and_p1():
    rng = np.random.default_rng(0)
    g = _su2(rng)
    assert sym_rep(g, 0).shape == (1, 1) and sym_rep(g, 0)[0, 0] == 1
    # p = 1 is similar to the defining rep: equal traces and dets
    m = sym_rep(g, 1)
    assert abs(np.trace(m) - np.trace(g).conjugate()) < 1e-12 or \
        abs(np.trace(m) - np.trace(g)) < 1e-12
    assert abs(np.linalg.det(m) - 1) < 1e-12


def test_sym_rep_diagonal_action():
    theta = 0.7
    g = np.diag([np.exp(1j * theta), np.exp(-1j * theta)])
    m = sym_rep(g, 1)
    # s_{1,1} (prop. to z0) picks up e^{-i theta}
    assert np.allclose(m, np.diag([np.exp(1j * theta), np.exp(-1j * theta)]))
    m3 = sym_rep(g, 3)
    assert np.allclose(m3, np.diag([np.exp(1j * k * theta)
                                    for k in (3, 1, -1, -3)]), atol=1e-12)


def test_sym_rep_unitary_and_multiplicative():
    rng = np.random.default_rng(1)
    for p in (2, 7, 20):
        for _ in range(10):
            a, b = _su2(rng), _su2(rng)
            ma, mb, mab = sym_rep(a, p), sym_rep(b, p), sym_rep(a @ b, p)
            assert np.linalg.norm(ma.conj().T @ ma - np.eye(p + 1)) < 1e-10
            assert np.linalg.norm(ma @ mb - mab) < 1e-9


def test_character_identity():
    rng = np.random.default_rng(2)
    for _ in range(30):
        g = _su2(rng)
        for p in (1, 8, 33, 50):
            assert abs(np.trace(sym_rep(g, p)).real
                       - su2_character(g, p)) < 1e-10


def test_character_trig_form():
    theta = 1.234
    g = np.diag([np.exp(1j * theta), np.exp(-1j * theta)])
    for p in (2, 5, 9):
        assert abs(su2_character(g, p)
                   - math.sin((p + 1) * theta) / math.sin(theta)) < 1e-12


def test_character_limits():
    assert su2_character(np.eye(2), 7) == 8
    assert su2_character(-np.eye(2), 3) == -4
    assert su2_character(-np.eye(2), 4) == 5
    g = np.diag([1j, -1j])
    assert abs(su2_character(g, 2) + 1) < 1e-14


@settings(max_examples=20, deadline=None)
@given(theta=st.floats(0.2, math.pi - 0.2), p=st.integers(0, 40))
def test_character_matches_geometric_sum(theta, p):
    g = np.diag([np.exp(1j * theta), np.exp(-1j * theta)])
    expected = sum(math.cos((p - 2 * j) * theta) for j in range(p + 1))
    assert abs(su2_character(g, p) - expected) < 1e-9


def test_zero_one_check():
    g = np.diag([1j, -1j])  # theta = pi/2
    rep = zero_one_check(g, [1, 2, 4, 8, 16])
    assert rep["all_ok"]
    assert abs(rep["rows"][0]["value"]) < 1e-14  # chi_1 = 2cos(pi/2) = 0
    vals = [r["value"] for r in rep["rows"]]
    assert all(r["value"] <= r["bound"] + 1e-12 for r in rep["rows"])
    assert vals[-1] < 0.2  # decay

    with pytest.raises(ArithmeticError_, match="central"):
        zero_one_check(-np.eye(2), [1, 2])


def test_peter_weyl_partial_sums_report():
    # report-only sanity: partial sums concentrate at the identity
    rng = np.random.default_rng(3)
    g = _su2(rng)
    at_id = sum((p + 1) * su2_character(np.eye(2), p) for p in range(12))
    away = sum((p + 1) * su2_character(g, p) for p in range(12))
    assert at_id == sum((p + 1) ** 2 for p in range(12))
    assert np.isfinite(away)
