"""Eigensolves and spectral statistics: nontrivial radius, Kesten-McKay
comparison, log-determinants, gap/expander report, mixed quantization,
quantum variance, QE and zero-equidistribution experiments, and the
harmonic-block cross-check of the averaging operator.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .arithmetic import cayley_bundle, cayley_bundle_from_reps, su2_of, \
    quaternion_generators
from .bundles import FlatBundle, laplacian_matrix
from .cp1 import (CP1Error, FockSection, SphereFunction, harmonic_basis,
                  roots, so3_of, sym_basis_norms, toeplitz, poly_sphere_inner)
from .graphs import injectivity_radius, tree_closed_walks
from .kernels import time_average

__all__ = [
    "LabError",
    "Spectrum",
    "eigendecompose",
    "eigenvalues_only",
    "nontrivial_radius",
    "km_density",
    "km_cdf",
    "km_moment",
    "ks_distance",
    "logdet",
    "logdet_limit_constant",
    "gap_report",
    "mixed_observable",
    "quantum_variance",
    "qe_experiment",
    "zero_experiment",
    "harmonic_block_check",
    "alon_boppana_report",
    "section_at_vertex",
    "time_average",
]

MAX_DENSE_DIM = 6000


class LabError(ValueError):
    pass


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual: float

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)


def _check_dense_budget(n: int) -> None:
    if n > MAX_DENSE_DIM:
        raise LabError(
            f"matrix dimension {n} exceeds the dense-solver budget "
            f"{MAX_DENSE_DIM}; reduce p or the graph size (iterative "
            "solvers would compromise full-spectrum statistics)")


def eigendecompose(mat: np.ndarray, hermitian_tol: float = 1e-10,
                   check_count: int = 64) -> Spectrum:
    """Full Hermitian eigendecomposition with residual validation.

    The residual max ||H v - lambda v|| is sampled on ``check_count``
    eigenpairs to keep the check O(n^2 k).
    """
    n = mat.shape[0]
    _check_dense_budget(n)
    scale = max(1.0, float(np.abs(mat).max()))
    herm_defect = float(np.linalg.norm(mat - mat.conj().T, np.inf))
    if herm_defect > hermitian_tol * scale:
        raise LabError(f"matrix is not Hermitian (defect {herm_defect:.2e})")
    vals, vecs = np.linalg.eigh(mat)
    idx = np.linspace(0, n - 1, min(check_count, n)).astype(int)
    sub = vecs[:, idx]
    resid = float(np.abs(mat @ sub - sub * vals[idx]).max())
    if resid > 1e-8 * (1.0 + float(np.abs(vals).max())):
        raise LabError(f"eigen residual {resid:.2e} too large")
    return Spectrum(vals, vecs, resid)


def eigenvalues_only(mat: np.ndarray) -> np.ndarray:
    _check_dense_budget(mat.shape[0])
    return np.linalg.eigvalsh(mat)


def _as_values(spectrum) -> np.ndarray:
    if isinstance(spectrum, Spectrum):
        return spectrum.eigenvalues
    return np.asarray(spectrum)


def nontrivial_radius(spectrum, d: int, tol: float = 1e-6) -> dict:
    """Largest |lambda| after excluding eigenvalues at +-d (within tol).

    Exclusions are reported, never silent.
    """
    vals = _as_values(spectrum)
    at_plus = int(np.sum(np.abs(vals - d) <= tol))
    at_minus = int(np.sum(np.abs(vals + d) <= tol))
    keep = vals[np.abs(np.abs(vals) - d) > tol]
    if keep.size == 0:
        raise LabError("all eigenvalues are trivial")
    return {"radius": float(np.abs(keep).max()),
            "excluded_plus_d": at_plus, "excluded_minus_d": at_minus}


def km_density(d: int, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    edge = 2.0 * math.sqrt(d - 1)
    inside = np.abs(lam) <= edge
    out = np.zeros_like(lam)
    out[inside] = (d * np.sqrt(4 * (d - 1) - lam[inside] ** 2)
                   / (2 * np.pi * (d * d - lam[inside] ** 2)))
    return out


def km_cdf(d: int, x: float) -> float:
    edge = 2.0 * math.sqrt(d - 1)
    if x <= -edge:
        return 0.0
    if x >= edge:
        return 1.0
    val, _ = quad(lambda t: km_density(d, t), -edge, x, limit=200)
    return float(val)


def km_moment(d: int, k: int) -> int:
    """Moments of the Kesten-McKay law count tree closed walks."""
    return tree_closed_walks(d, k)


def ks_distance(spectrum, d: int, atom_tol: float = 1e-6) -> float:
    """Kolmogorov-Smirnov distance between the empirical eigenvalue
    distribution (with +-d atoms excluded) and the Kesten-McKay law."""
    vals = np.sort(_as_values(spectrum))
    vals = vals[np.abs(np.abs(vals) - d) > atom_tol]
    n = len(vals)
    if n == 0:
        raise LabError("no nontrivial eigenvalues")
    best = 0.0
    for i, lam in enumerate(vals):
        f = km_cdf(d, float(lam))
        best = max(best, abs((i + 1) / n - f), abs(i / n - f))
    return best


def logdet(spectrum, d: int, tol: float = 1e-6) -> float:
    """Normalized log determinant of (d - Laplacian): eigenvalues at d
    excluded, everything above d + tol rejected."""
    vals = _as_values(spectrum)
    if np.any(vals > d + tol):
        raise LabError(f"eigenvalue {vals.max():.6f} above d violates "
                       "positivity")
    keep = vals[vals < d - tol]
    if keep.size == 0:
        raise LabError("empty spectrum after excluding d")
    return float(np.sum(np.log(d - keep)) / len(vals))


def logdet_limit_constant(d: int) -> float:
    """(d-1) ln(d-1) - (d-2)/2 (ln(d-2) + ln d)."""
    if d < 3:
        raise LabError("constant needs d >= 3")
    return float((d - 1) * math.log(d - 1)
                 - 0.5 * (d - 2) * (math.log(d - 2) + math.log(d)))


def gap_report(spectra_by_p: dict, d: int, epsilon: float,
               atom_tol: float = 1e-6) -> dict:
    """Spectral-gap classification for a family of bundles over p.

    Each p passes when its nontrivial spectrum sits in [-d, d-eps];
    the expander verdict additionally requires the +d atom to be simple
    and to occur only at p = 0.
    """
    rows = []
    exp_ok = True
    for p in sorted(spectra_by_p):
        vals = _as_values(spectra_by_p[p])
        at_plus = int(np.sum(np.abs(vals - d) <= atom_tol))
        at_minus = int(np.sum(np.abs(vals + d) <= atom_tol))
        keep = vals[np.abs(np.abs(vals) - d) > atom_tol]
        top = float(keep.max()) if keep.size else None
        radius = float(np.abs(keep).max()) if keep.size else None
        gap_ok = radius is not None and radius <= d - epsilon + 1e-12
        if p == 0:
            exp_ok = exp_ok and at_plus == 1 and gap_ok
        else:
            exp_ok = exp_ok and at_plus == 0 and gap_ok
        rows.append({"p": p, "top_nontrivial": top, "radius_nontrivial": radius,
                     "plus_d": at_plus, "minus_d": at_minus, "gap_ok": gap_ok})
    return {"epsilon": epsilon, "rows": rows,
            "gap_ok": all(r["gap_ok"] for r in rows),
            "exp_ok": exp_ok}


def mixed_observable(bundle: FlatBundle, f) -> np.ndarray:
    """Fiberwise Berezin-Toeplitz quantization: block-diagonal matrix
    diag_x T_{f_x, p} over the graph, p + 1 = fiber dimension."""
    p = bundle.fiber_dim - 1
    n_vert = bundle.graph.vertex_count
    if isinstance(f, SphereFunction):
        blocks = [toeplitz(f, p).matrix] * n_vert
    else:
        if len(f) != n_vert:
            raise LabError("need one observable per vertex")
        blocks = [toeplitz(fx, p).matrix for fx in f]
    out = np.zeros((bundle.total_dim, bundle.total_dim), dtype=complex)
    ell = bundle.fiber_dim
    for x in range(n_vert):
        out[x * ell:(x + 1) * ell, x * ell:(x + 1) * ell] = blocks[x]
    return out


def quantum_variance(mat: np.ndarray, spectrum: Spectrum) -> float:
    """Mean squared diagonal matrix element across the eigenbasis.

    Inside degenerate eigenspaces the value depends on the solver's
    orthonormal basis choice; QE statements are averages, so the basis
    dependence is bounded by the variance itself.
    """
    vecs = spectrum.eigenvectors
    if mat.shape != (spectrum.dim, spectrum.dim):
        raise LabError("dimension mismatch")
    diag = np.einsum("ij,ij->j", vecs.conj(), mat @ vecs)
    return float(np.mean(np.abs(diag) ** 2))


def qe_experiment(pairs, p_list, f: SphereFunction) -> list[dict]:
    """Quantum-variance table over (p0, p1) pairs and spin values.

    The observable is centered (its mean is subtracted) before
    quantization, matching the h_0-term normalization of the variance.
    """
    fbar = f.integral()
    rows = []
    for p0, p1 in pairs:
        for p in p_list:
            t0 = time.perf_counter()
            bundle = cayley_bundle(p0, p1, p)
            spec = eigendecompose(laplacian_matrix(bundle))
            mat = mixed_observable(bundle, f)
            if fbar != 0.0:
                mat -= fbar * np.eye(bundle.total_dim)
            var = quantum_variance(mat, spec)
            rows.append({"p0": p0, "p1": p1, "p": p, "variance": var,
                         "dim": bundle.total_dim,
                         "seconds": time.perf_counter() - t0})
    return rows


def section_at_vertex(vec: np.ndarray, x: int, ell: int) -> FockSection:
    """Extract the fiber value of a vertex-major section vector."""
    return FockSection(ell - 1, vec[x * ell:(x + 1) * ell])


def zero_experiment(p0: int, p1: int, p_list, test_functions,
                    degeneracy_tol: float = 1e-12,
                    collect_zeros: bool = False) -> list[dict]:
    """Zero statistics of all eigensections over the (p0, p1) bundle.

    For each p: per-section zero sets over all vertices (exactly p per
    nondegenerate vertex), the test-function discrepancy
    D(u) = max_g |mean over zeros of g - integral of g|, and the count
    of degenerate (numerically vanishing) vertex values.
    """
    targets = [(g, g.integral()) for g in test_functions]
    out = []
    for p in p_list:
        bundle = cayley_bundle(p0, p1, p)
        ell = bundle.fiber_dim
        n_vert = bundle.graph.vertex_count
        spec = eigendecompose(laplacian_matrix(bundle))
        discrepancies = []
        zero_counts = []
        section_skips = []
        zero_rows = []
        for i in range(spec.dim):
            vec = spec.eigenvectors[:, i]
            sec_scale = float(np.linalg.norm(vec))
            points = []
            mults = []
            skipped = 0
            for x in range(n_vert):
                sec = section_at_vertex(vec, x, ell)
                if math.sqrt(sec.norm_sq) < degeneracy_tol * sec_scale:
                    skipped += 1
                    continue
                for z, m in roots(sec):
                    points.append(z.n)
                    mults.append(m)
                    if collect_zeros:
                        th, ph = z.theta_phi
                        zero_rows.append({"section_index": i, "vertex": x,
                                          "theta": th, "phi": ph,
                                          "multiplicity": m})
            section_skips.append(skipped)
            mults_arr = np.array(mults, dtype=float)
            pts_arr = np.array(points)
            total = float(mults_arr.sum())
            zero_counts.append(int(total))
            disc = 0.0
            for g, g_int in targets:
                gv = np.array([g.eval_n(*nc) for nc in pts_arr])
                disc = max(disc, abs(float((gv * mults_arr).sum()) / total - g_int))
            discrepancies.append(disc)
        discrepancies = np.array(discrepancies)
        # the exact integer check covers sections with no vanishing
        # vertex value; degenerate ones are reported, not failed
        exact = all(c == p * n_vert
                    for c, s in zip(zero_counts, section_skips) if s == 0)
        row = {"p0": p0, "p1": p1, "p": p, "dim": spec.dim,
               "expected_zeros": p * n_vert,
               "zero_counts": zero_counts,
               "all_counts_exact": exact,
               "degenerate_sections": sum(1 for s in section_skips if s),
               "degenerate_vertices": sum(section_skips),
               "median_discrepancy": float(np.median(discrepancies)),
               "mean_discrepancy": float(np.mean(discrepancies))}
        if collect_zeros:
            row["zeros"] = zero_rows
        out.append(row)
    return out


def harmonic_block_check(p0: int, p1: int, q: int, tol: float = 1e-8) -> dict:
    """Two builds of the averaging operator on degree-q harmonic families.

    (a) fiber = spherical harmonics H_q with rotation matrices from the
    action on sphere-coordinate polynomials; (b) fiber = Sym^(2q) via
    the symmetric-power representation.  The two fibers are isomorphic
    representations, so the spectra must agree.
    """
    basis = harmonic_basis(q)
    dim = 2 * q + 1
    gens = quaternion_generators(p0)
    reps = []
    for a in gens:
        rot_inv = so3_of(su2_of(a, p0)).T  # inverse of the point rotation
        mat = np.empty((dim, dim))
        rotated = [h.rotated(rot_inv) for h in basis]
        for j in range(dim):
            for i in range(dim):
                mat[i, j] = poly_sphere_inner(rotated[j].terms, basis[i].terms)
        reps.append(mat.astype(complex))
    bundle_h = cayley_bundle_from_reps(p0, p1, reps)
    vals_h = eigenvalues_only(laplacian_matrix(bundle_h))
    bundle_s = cayley_bundle(p0, p1, 2 * q)
    vals_s = eigenvalues_only(laplacian_matrix(bundle_s))
    gap = float(np.abs(vals_h - vals_s).max())
    return {"q": q, "dim_harmonic": dim, "dim_sym": 2 * q + 1,
            "max_eigenvalue_gap": gap, "ok": gap <= tol}


def alon_boppana_report(graph, k_max: int = 6) -> dict:
    """Finite-size lower-bound certificate for the nontrivial radius:

        r^(2k) >= good_frac * tree_walks(2k) - (bad_frac + 2/|X|) d^(2k)

    evaluated for k = 1..k_max; vacuous (negative) right-hand sides are
    flagged.  The certificate is bundle-independent.
    """
    d = graph.degree
    n = graph.vertex_count
    if graph.vertex_transitive:
        injs = [injectivity_radius(graph, 0)] * n
    else:
        injs = [injectivity_radius(graph, x) for x in range(n)]
    rows = []
    best = None
    for k in range(1, k_max + 1):
        good = sum(1 for i in injs if i >= k) / n
        bad = sum(1 for i in injs if i <= k - 1) / n
        rhs = good * tree_closed_walks(d, 2 * k) - (bad + 2.0 / n) * d ** (2 * k)
        bound = rhs ** (1.0 / (2 * k)) if rhs > 0 else None
        rows.append({"k": k, "good_frac": good, "bad_frac": bad,
                     "rhs": rhs, "bound": bound, "vacuous": rhs <= 0})
        if bound is not None and (best is None or bound > best):
            best = bound
    return {"rows": rows, "best_bound": best,
            "alon_boppana_limit": 2.0 * math.sqrt(d - 1),
            "all_vacuous": best is None}
