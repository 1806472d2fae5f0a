"""Acceptance suite: one test per stated criterion, at stated tolerances.

Run with ``pytest -s tests/test_acceptance.py`` to see one pass/fail
line per criterion (lines are also forced to the real stdout so they
survive capture).  Heavy eigendecompositions are cached and attributed
to the first criterion that needs them; every criterion asserts its own
wall-clock budget.
"""

import math
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

from bundlelab.arithmetic import cayley_bundle, su2_character, sym_rep
from bundlelab.bundles import (haar_unitary, laplacian_matrix, random_bundle,
                               trace_power_oracle, trivial_bundle)
from bundlelab.cp1 import (SphereFunction, parse_observable, quadrature_grid,
                           sym_basis_norms, toeplitz, toeplitz_norm_check,
                           monomial_integral)
from bundlelab.graphs import girth, petersen_graph
from bundlelab.kernels import (b1_matrix, b1_structure_report, chebyshev_h,
                               identity_kernel, identity_suite,
                               matrix_polyval, time_average, to_matrix,
                               tree_kernel_matrix)
from bundlelab.lab import (Spectrum, eigendecompose, eigenvalues_only,
                           harmonic_block_check, km_moment, ks_distance,
                           logdet, logdet_limit_constant, mixed_observable,
                           nontrivial_radius, quantum_variance,
                           zero_experiment)

N3 = SphereFunction.monomial(0, 0, 1)


def _emit(line: str) -> None:
    print(line, file=sys.__stdout__, flush=True)


class _Criterion:
    def __init__(self, number: int, title: str, budget_s: float):
        self.number, self.title, self.budget = number, title, budget_s

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        took = time.perf_counter() - self.t0
        verdict = "PASS" if exc_type is None else "FAIL"
        _emit(f"ACCEPTANCE {self.number:2d} [{self.title}]: {verdict} "
              f"in {took:.1f}s (budget {self.budget:.0f}s)")
        if exc_type is None:
            assert took <= self.budget, \
                f"criterion {self.number} exceeded its runtime budget"
        return False


@lru_cache(maxsize=None)
def bundle_135(p: int):
    return cayley_bundle(13, 5, p)


@lru_cache(maxsize=None)
def eigvals_135(p: int):
    return eigenvalues_only(laplacian_matrix(bundle_135(p)))


@lru_cache(maxsize=None)
def spectrum_135(p: int) -> Spectrum:
    return eigendecompose(laplacian_matrix(bundle_135(p)))


@lru_cache(maxsize=None)
def bundle_513(p: int):
    return cayley_bundle(5, 13, p)


@lru_cache(maxsize=None)
def eigvals_513(p: int):
    return eigenvalues_only(laplacian_matrix(bundle_513(p)))


@lru_cache(maxsize=None)
def spectrum_513(p: int) -> Spectrum:
    return eigendecompose(laplacian_matrix(bundle_513(p)))


@lru_cache(maxsize=None)
def petersen_haar_bundle():
    return random_bundle(petersen_graph(), 2, seed=20240517)


def test_c01_ramanujan_bound():
    with _Criterion(1, "Ramanujan bound", 120 + 600):
        bound_13 = 2 * math.sqrt(13) + 1e-6
        for p in (0, 1, 2, 3):
            t_p = time.perf_counter()
            rep = nontrivial_radius(eigvals_135(p), 14, tol=1e-6)
            assert rep["radius"] <= bound_13, (p, rep)
            if p == 0:
                assert rep["excluded_plus_d"] >= 1
                assert rep["excluded_minus_d"] >= 1
            else:
                assert rep["excluded_plus_d"] == 0
                assert rep["excluded_minus_d"] == 0
            assert time.perf_counter() - t_p < 60, f"p={p} over per-p budget"

        t_big = time.perf_counter()
        bound_5 = 2 * math.sqrt(5) + 1e-6
        for p in (0, 1):
            rep = nontrivial_radius(eigvals_513(p), 6, tol=1e-6)
            assert rep["radius"] <= bound_5, (p, rep)
        assert time.perf_counter() - t_big < 600


def test_c02_trace_formula():
    with _Criterion(2, "trace formula", 10):
        bundle = petersen_haar_bundle()
        lap = laplacian_matrix(bundle)
        power = np.eye(bundle.total_dim, dtype=complex)
        for k in range(7):
            lhs = float(np.trace(power).real)
            rhs = trace_power_oracle(bundle, k)
            assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs)), k
            power = power @ lap


def test_c03_chebyshev_kernel_identity():
    with _Criterion(3, "Chebyshev kernel identity", 30):
        pet = petersen_graph()
        for bundle in (trivial_bundle(pet, 2), petersen_haar_bundle()):
            lap = laplacian_matrix(bundle)
            for k in range(6):
                resid = np.linalg.norm(
                    to_matrix(identity_kernel(bundle, k))
                    - matrix_polyval(chebyshev_h(3, k), lap))
                assert resid <= 1e-8, (k, resid)
        cay = bundle_135(1)
        lap = laplacian_matrix(cay)
        for k in range(6):
            resid = np.linalg.norm(
                tree_kernel_matrix(cay, k)
                - matrix_polyval(chebyshev_h(14, k), lap))
            assert resid <= 1e-8, (k, resid)


def test_c04_kernel_identity_suite():
    with _Criterion(4, "kernel identity suite", 60):
        rows = identity_suite(petersen_haar_bundle(), levels=(0, 1, 2, 3),
                              ops_per_level=20, seed=7)
        worst = max(rows, key=lambda r: r["residual"])
        assert worst["residual"] <= 1e-9, worst


def test_c05_nonbacktracking_structure():
    with _Criterion(5, "nonbacktracking structure", 30):
        # Petersen trivial bundle against the Ihara-Bass multiset
        triv = trivial_bundle(petersen_graph())
        theta = np.linalg.eigvals(b1_matrix(triv))
        expected = [1.0 + 0j] * 5 + [-1.0 + 0j] * 5
        for lam, mult in ((3.0, 1), (1.0, 5), (-2.0, 4)):
            disc = np.sqrt(complex(lam * lam - 8))
            expected += [(lam + disc) / 2] * mult + [(lam - disc) / 2] * mult
        from scipy.optimize import linear_sum_assignment
        cost = np.abs(np.array(theta)[:, None]
                      - np.array(expected)[None, :])
        r_i, c_i = linear_sum_assignment(cost)
        assert cost[r_i, c_i].max() <= 1e-6
        # the expected multiset realizes {2, 1, (1 +- i sqrt7)/2 x5,
        # -1 +- i x4, +1 x6 = 5+1, -1 x5}; the lemma's printed +-1
        # assignment is flagged by the report, not failed
        rep = b1_structure_report(triv)
        assert rep["ok"] and rep["sign_assignment_flag"]
        assert (rep["mult_plus_one"], rep["mult_minus_one"]) == (6, 5)

        # quadratic pairing against the endomorphism spectrum, random rank 2
        rep2 = b1_structure_report(petersen_haar_bundle())
        assert rep2["ok"], rep2
        assert rep2["pairing_residual"] <= 1e-6
        assert rep2["matching_residual"] <= 1e-6


def test_c06_kesten_mckay():
    with _Criterion(6, "Kesten-McKay law", 300):
        # (a) exact moment bridge below the girth
        g = girth(bundle_135(0).graph)
        assert g == 4
        for p in (0, 1, 2):
            bundle = bundle_135(p)
            lap = laplacian_matrix(bundle)
            power = np.eye(bundle.total_dim, dtype=complex)
            for k in range(g):
                tr = float(np.trace(power).real) / bundle.total_dim
                assert abs(tr - km_moment(14, k)) <= 1e-8, (p, k)
                power = power @ lap
        # (b) KS trend in the spin parameter
        ks1 = ks_distance(eigvals_135(1), 14)
        ks16 = ks_distance(eigvals_135(16), 14)
        assert ks16 < ks1, (ks1, ks16)


def test_c07_log_determinant():
    with _Criterion(7, "log determinant", 300):
        assert abs(logdet_limit_constant(14) - 2.600558) <= 1e-6
        const = logdet_limit_constant(14)
        err1 = abs(logdet(eigvals_135(1), 14) - const)
        err16 = abs(logdet(eigvals_135(16), 14) - const)
        assert err16 < err1, (err1, err16)


def test_c08_su2_toeplitz_exactness():
    with _Criterion(8, "SU(2)/Toeplitz exactness", 60):
        rng = np.random.default_rng(1234)
        for i in range(100):
            g = haar_unitary(2, rng)
            g /= np.sqrt(np.linalg.det(g))
            p = int(rng.integers(0, 51)) if i % 2 else 50
            assert abs(np.trace(sym_rep(g, p)).real
                       - su2_character(g, p)) <= 1e-10, (i, p)
        # orthonormal-basis Gram is the identity to 1e-12
        for p in (1, 3, 8, 16):
            norms = sym_basis_norms(p)
            gram = np.array([[float(norms[i] * norms[j]
                                    * monomial_integral(j, p - j, i, p - i))
                              for j in range(p + 1)] for i in range(p + 1)])
            assert np.abs(gram - np.eye(p + 1)).max() <= 1e-12
        # exact trace identity and norm bound
        f = parse_observable("n3^2*n1 - n2*n1 + n2^3 + 1/4")
        assert f.degree <= 6
        for p in (1, 8, 32):
            t = toeplitz(f, p)
            assert abs(np.trace(t.matrix).real
                       - (p + 1) * f.integral()) <= 1e-12, p
            rep = toeplitz_norm_check(f, p)
            assert rep["op_norm"] <= rep["sup_f"] + 1e-9, p


def test_c09_quantum_variance():
    with _Criterion(9, "quantum variance / QE trend", 900):
        spec1 = spectrum_135(1)
        bundle1 = bundle_135(1)
        m_obs = mixed_observable(bundle1, N3)
        rng = np.random.default_rng(99)
        m_rand = rng.standard_normal((240, 240)) \
            + 1j * rng.standard_normal((240, 240))
        m_rand += m_rand.conj().T
        for m in (m_obs, m_rand):
            v0 = quantum_variance(m, spec1)
            for t0 in (1.0, 10.0, 100.0):
                avg = time_average(m, spec1, t0)
                assert abs(quantum_variance(avg, spec1) - v0) <= 1e-10, t0
        lap1 = laplacian_matrix(bundle1)
        a = rng.standard_normal((240, 240)) \
            + 1j * rng.standard_normal((240, 240))
        assert quantum_variance(lap1 @ a - a @ lap1, spec1) <= 1e-12

        var_p1 = quantum_variance(m_obs, spec1)
        spec16 = spectrum_135(16)
        var_p16 = quantum_variance(mixed_observable(bundle_135(16), N3),
                                   spec16)
        assert 0 < var_p16 < var_p1, (var_p1, var_p16)

        # large scale direction at fixed p = 1: p1 = 13 beats p1 = 5
        spec_b = spectrum_513(1)
        var_big = quantum_variance(mixed_observable(bundle_513(1), N3),
                                   spec_b)
        assert var_big < var_p1, (var_p1, var_big)


def test_c10_zero_equidistribution():
    with _Criterion(10, "zero equidistribution", 600):
        tests = [N3, parse_observable("n3^2"), parse_observable("n1*n2")]
        rows = zero_experiment(13, 5, [4, 8, 16], tests)
        by_p = {r["p"]: r for r in rows}
        assert by_p[8]["expected_zeros"] == 960
        assert by_p[8]["all_counts_exact"]
        assert by_p[16]["median_discrepancy"] < by_p[4]["median_discrepancy"]


def test_c11_harmonic_blocks():
    with _Criterion(11, "harmonic-block averaging check", 120):
        for q in (0, 1, 2):
            rep = harmonic_block_check(13, 5, q, tol=1e-8)
            assert rep["ok"], rep
            assert rep["dim_harmonic"] == 2 * q + 1
