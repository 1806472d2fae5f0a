"""Exact geometry and Berezin-Toeplitz quantization on the projective line.

Conventions: the volume of CP^1 is normalized to 1, making the diagonal
reproducing kernel equal to p+1 and the trace identity
``tr T_{f,p} = (p+1) integral(f)`` exact.  Holomorphic sections of
degree p are coefficient vectors in the orthonormal basis

    s_{p,i} = ((p+1) C(p,i))^(1/2) z0^i z1^(p-i),  i = 0..p,

ascending in z0-degree.  Real observables are polynomials in the sphere
coordinates n1 = 2 Re(z0 conj(z1)), n2 = 2 Im(z0 conj(z1)),
n3 = |z0|^2 - |z1|^2, integrated exactly through their z-monomial
expansion; a callable path with explicit quadrature exists for
demonstration only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "CP1Error",
    "CP1Point",
    "FockSection",
    "SphereFunction",
    "ToeplitzOperator",
    "fs_distance",
    "bergman",
    "monomial_integral",
    "toeplitz",
    "toeplitz_norm_check",
    "section_eval",
    "pointwise_mass",
    "roots",
    "quadrature_grid",
    "sphere_monomial_integral",
    "harmonic_basis",
    "so3_of",
    "poly_sphere_inner",
    "parse_observable",
    "sym_basis_norms",
]

from .arithmetic import sym_basis_norms


class CP1Error(ValueError):
    pass


@dataclass(frozen=True)
class CP1Point:
    """Unit vector (z0, z1), projectively identified; the canonical
    representative has its first nonzero coordinate positive real."""

    z0: complex
    z1: complex

    @staticmethod
    def of(z0: complex, z1: complex) -> "CP1Point":
        norm = math.sqrt(abs(z0) ** 2 + abs(z1) ** 2)
        if norm < 1e-300:
            raise CP1Error("zero vector does not define a point")
        z0, z1 = z0 / norm, z1 / norm
        lead = z0 if abs(z0) > 1e-14 else z1
        phase = lead / abs(lead)
        return CP1Point(z0 / phase, z1 / phase)

    @property
    def n(self) -> tuple[float, float, float]:
        w = self.z0 * self.z1.conjugate()
        return (2 * w.real, 2 * w.imag, abs(self.z0) ** 2 - abs(self.z1) ** 2)

    @property
    def theta_phi(self) -> tuple[float, float]:
        n1, n2, n3 = self.n
        return math.acos(max(-1.0, min(1.0, n3))), math.atan2(n2, n1)


def fs_distance(z: CP1Point, w: CP1Point) -> float:
    """Fubini-Study distance arccos |<z, w>|, in [0, pi/2]."""
    ip = z.z0 * w.z0.conjugate() + z.z1 * w.z1.conjugate()
    return math.acos(max(-1.0, min(1.0, abs(ip))))


def bergman(p: int, z: CP1Point, w: CP1Point) -> complex:
    """Reproducing kernel (p+1) <z, w>^p on canonical representatives."""
    ip = z.z0 * w.z0.conjugate() + z.z1 * w.z1.conjugate()
    return (p + 1) * ip ** p


def monomial_integral(a0: int, a1: int, b0: int, b1: int) -> Fraction:
    """Exact integral of z0^a0 z1^a1 conj(z0)^b0 conj(z1)^b1 over CP^1
    with unit total volume: delta_{a0 b0} delta_{a1 b1} a0! a1! / (a0+a1+1)!."""
    if min(a0, a1, b0, b1) < 0:
        raise CP1Error("negative exponent")
    if a0 != b0 or a1 != b1:
        return Fraction(0)
    return Fraction(math.factorial(a0) * math.factorial(a1),
                    math.factorial(a0 + a1 + 1))


_N_TO_Z = {
    # n_i as z-monomial dictionaries keyed by (z0, z1, z0bar, z1bar) exponents
    0: {(1, 0, 0, 1): 1 + 0j, (0, 1, 1, 0): 1 + 0j},
    1: {(1, 0, 0, 1): -1j, (0, 1, 1, 0): 1j},
    2: {(1, 0, 1, 0): 1 + 0j, (0, 1, 0, 1): -1 + 0j},
}


def _zpoly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0) + ca * cb
    return {k: v for k, v in out.items() if v != 0}


@dataclass(frozen=True)
class SphereFunction:
    """Real polynomial in the sphere coordinates (n1, n2, n3), plus an
    optional black-box callable for non-polynomial observables."""

    terms: dict = field(default_factory=dict)   # (a, b, c) -> float
    fn: object = None                            # callable(n1, n2, n3)
    band: int | None = None                      # band limit for fn

    @staticmethod
    def monomial(a: int = 0, b: int = 0, c: int = 0,
                 coeff: float = 1.0) -> "SphereFunction":
        return SphereFunction({(a, b, c): float(coeff)})

    @staticmethod
    def constant(value: float) -> "SphereFunction":
        return SphereFunction({(0, 0, 0): float(value)})

    @property
    def degree(self) -> int:
        if self.fn is not None:
            if self.band is None:
                raise CP1Error("callable observable needs an explicit band")
            return self.band
        return max((sum(k) for k in self.terms), default=0)

    def __add__(self, other: "SphereFunction") -> "SphereFunction":
        if self.fn is not None or other.fn is not None:
            raise CP1Error("cannot add callable observables")
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return SphereFunction({k: v for k, v in terms.items() if v != 0.0})

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return SphereFunction({k: v * other for k, v in self.terms.items()})
        if self.fn is not None or other.fn is not None:
            raise CP1Error("cannot multiply callable observables")
        out: dict = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                k = tuple(x + y for x, y in zip(ka, kb))
                out[k] = out.get(k, 0.0) + ca * cb
        return SphereFunction({k: v for k, v in out.items() if v != 0.0})

    __rmul__ = __mul__

    def __sub__(self, other: "SphereFunction") -> "SphereFunction":
        return self + (-1.0) * other

    def eval_n(self, n1: float, n2: float, n3: float) -> float:
        if self.fn is not None:
            return float(self.fn(n1, n2, n3))
        return float(sum(c * n1 ** a * n2 ** b * n3 ** cc
                         for (a, b, cc), c in self.terms.items()))

    def __call__(self, z: CP1Point) -> float:
        return self.eval_n(*z.n)

    def z_monomials(self) -> dict:
        """Expansion into z-monomials keyed (z0, z1, z0bar, z1bar)."""
        if self.fn is not None:
            raise CP1Error("callable observables have no exact expansion")
        out: dict = {}
        for (a, b, c), coeff in self.terms.items():
            term = {(0, 0, 0, 0): 1 + 0j}
            for idx, power in ((0, a), (1, b), (2, c)):
                for _ in range(power):
                    term = _zpoly_mul(term, _N_TO_Z[idx])
            for k, v in term.items():
                out[k] = out.get(k, 0) + coeff * v
        return {k: v for k, v in out.items() if v != 0}

    def integral(self) -> float:
        """Exact integral over CP^1 (unit volume)."""
        total = 0j
        for (e0, e1, f0, f1), coeff in self.z_monomials().items():
            total += coeff * float(monomial_integral(e0, e1, f0, f1))
        return float(total.real)

    def rotated(self, rot: np.ndarray) -> "SphereFunction":
        """Substitute n -> rot @ n; used for the pullback f(g^{-1} z)
        with rot = so3_of(g)^{-1}."""
        if self.fn is not None:
            raise CP1Error("cannot rotate a callable observable")
        terms: dict = {}
        rows = [
            {(1, 0, 0): rot[0, 0], (0, 1, 0): rot[0, 1], (0, 0, 1): rot[0, 2]},
            {(1, 0, 0): rot[1, 0], (0, 1, 0): rot[1, 1], (0, 0, 1): rot[1, 2]},
            {(1, 0, 0): rot[2, 0], (0, 1, 0): rot[2, 1], (0, 0, 1): rot[2, 2]},
        ]
        for (a, b, c), coeff in self.terms.items():
            term = {(0, 0, 0): coeff}
            for idx, power in ((0, a), (1, b), (2, c)):
                for _ in range(power):
                    new: dict = {}
                    for k, v in term.items():
                        for kr, vr in rows[idx].items():
                            kk = tuple(x + y for x, y in zip(k, kr))
                            new[kk] = new.get(kk, 0.0) + v * vr
                    term = new
            for k, v in term.items():
                terms[k] = terms.get(k, 0.0) + v
        return SphereFunction({k: v for k, v in terms.items() if abs(v) > 0.0})


def parse_observable(text: str) -> SphereFunction:
    """Parse a polynomial over n1, n2, n3 (e.g. "n3^2 - 1/3")."""
    import sympy

    n1, n2, n3 = sympy.symbols("n1 n2 n3")
    try:
        expr = sympy.sympify(text.replace("^", "**"),
                             locals={"n1": n1, "n2": n2, "n3": n3})
        poly = sympy.Poly(sympy.expand(expr), n1, n2, n3)
    except (sympy.SympifyError, sympy.PolynomialError) as err:
        raise CP1Error(f"cannot parse observable {text!r}: {err}")
    terms = {}
    for monom, coeff in poly.terms():
        terms[tuple(int(m) for m in monom)] = float(coeff)
    return SphereFunction(terms)


def so3_of(g: np.ndarray) -> np.ndarray:
    """The rotation with n(g z) = so3_of(g) @ n(z), from the adjoint
    action on the quadratic forms behind the sphere coordinates."""
    s_mats = [np.array([[0, 1], [1, 0]], dtype=complex),
              np.array([[0, 1j], [-1j, 0]], dtype=complex),
              np.array([[1, 0], [0, -1]], dtype=complex)]
    rot = np.empty((3, 3))
    for i in range(3):
        gs = g.conj().T @ s_mats[i] @ g
        for j in range(3):
            rot[i, j] = 0.5 * np.trace(s_mats[j] @ gs).real
    return rot


@dataclass(frozen=True)
class FockSection:
    """Coefficients in the orthonormal basis s_{p,i}, ascending z0-degree."""

    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.degree + 1,):
            raise CP1Error("coefficient count does not match the degree")

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)


def section_eval(s: FockSection, z: CP1Point) -> complex:
    norms = sym_basis_norms(s.degree)
    p = s.degree
    return complex(sum(c * norms[i] * z.z0 ** i * z.z1 ** (p - i)
                       for i, c in enumerate(s.coeffs)))


def pointwise_mass(s: FockSection, z: CP1Point) -> float:
    return abs(section_eval(s, z)) ** 2


@dataclass(frozen=True)
class ToeplitzOperator:
    """Compression of multiplication by an observable to degree-p sections."""

    degree: int
    matrix: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        p = self.degree
        if self.matrix.shape != (p + 1, p + 1):
            raise CP1Error("Toeplitz matrix has the wrong shape")
        if self.hermitian:
            defect = np.linalg.norm(self.matrix - self.matrix.conj().T)
            if defect > 1e-10:
                raise CP1Error(f"matrix not Hermitian (defect {defect:.2e})")

    @property
    def operator_norm(self) -> float:
        if self.hermitian:
            return float(np.abs(np.linalg.eigvalsh(self.matrix)).max())
        return float(np.linalg.norm(self.matrix, 2))


def toeplitz(f: SphereFunction, p: int, nodes: int | None = None) -> ToeplitzOperator:
    """Entries <T s_j, s_i> = integral of f s_j conj(s_i).

    Polynomial observables integrate exactly through monomial
    integrals; callable observables use the quadrature grid and require
    an explicit band (``nodes``) at least band + p.
    """
    norms = sym_basis_norms(p)
    mat = np.zeros((p + 1, p + 1), dtype=complex)
    if f.fn is None:
        zmon = f.z_monomials()
        for i in range(p + 1):
            for j in range(p + 1):
                re, im = Fraction(0), Fraction(0)
                for (e0, e1, f0, f1), coeff in zmon.items():
                    val = monomial_integral(e0 + j, e1 + p - j, f0 + i, f1 + p - i)
                    if val:
                        re += Fraction(coeff.real) * val
                        im += Fraction(coeff.imag) * val
                mat[i, j] = norms[i] * norms[j] * (float(re) + 1j * float(im))
        return ToeplitzOperator(p, mat)
    if f.band is None and nodes is None:
        raise CP1Error("callable observable needs an explicit band")
    band = nodes if nodes is not None else f.band + p
    if f.band is not None and band < f.band + p:
        raise CP1Error(f"quadrature band {band} below band limit "
                       f"{f.band + p}")
    pts, wts = quadrature_grid(band)
    svals = _section_values(p, pts)
    fvals = np.array([f.eval_n(*pt.n) for pt in pts])
    mat = np.einsum("n,nj,ni->ij", wts * fvals, svals, svals.conj())
    herm = np.linalg.norm(mat - mat.conj().T) <= 1e-10
    return ToeplitzOperator(p, mat, hermitian=herm)


def _section_values(p: int, points) -> np.ndarray:
    norms = sym_basis_norms(p)
    out = np.empty((len(points), p + 1), dtype=complex)
    for n, z in enumerate(points):
        out[n] = [norms[i] * z.z0 ** i * z.z1 ** (p - i) for i in range(p + 1)]
    return out


def quadrature_grid(band: int) -> tuple[list[CP1Point], np.ndarray]:
    """Product rule exact for balanced z-monomials of bidegree <= band:
    Gauss-Legendre in cos(theta) (band+1 nodes) x uniform phase
    (2 band + 1 nodes), total weight one."""
    if band < 0:
        raise CP1Error("band must be nonnegative")
    t_nodes, t_weights = np.polynomial.legendre.leggauss(band + 1)
    n_phi = 2 * band + 1
    points, weights = [], []
    for t, wt in zip(t_nodes, t_weights):
        c = math.sqrt((1 + t) / 2)
        s = math.sqrt((1 - t) / 2)
        for j in range(n_phi):
            phi = 2 * math.pi * j / n_phi
            points.append(CP1Point(c, s * complex(math.cos(phi), math.sin(phi))))
            weights.append(wt / 2 / n_phi)
    return points, np.array(weights)


def toeplitz_norm_check(f: SphereFunction, p: int) -> dict:
    """Operator-norm and Hilbert-Schmidt bounds for the quantization.

    The sup of |f| is estimated on a grid refined with p: the Berezin
    norm approaches sup|f| at rate 1/p while the grid max converges at
    rate 1/p^2, so the comparison stays on the safe side.
    """
    op = toeplitz(f, p)
    pts, _ = quadrature_grid(f.degree + p + 8)
    sup_f = max(abs(f.eval_n(*z.n)) for z in pts)
    op_ok = op.operator_norm <= sup_f + 1e-9
    if f.fn is None:
        int_f2 = (f * f).integral()
    else:
        pts2, wts = quadrature_grid((f.band or 0) * 2)
        int_f2 = float(sum(w * f.eval_n(*z.n) ** 2 for z, w in zip(pts2, wts)))
    hs_sq = float(np.linalg.norm(op.matrix) ** 2) / (p + 1)
    hs_ok = hs_sq <= int_f2 + 1e-9
    return {"p": p, "op_norm": op.operator_norm, "sup_f": sup_f,
            "op_ok": op_ok, "hs_sq_normalized": hs_sq, "int_f_sq": int_f2,
            "hs_ok": hs_ok, "ok": op_ok and hs_ok}


def roots(s: FockSection, cutoff: float = 1e-12) -> list[tuple[CP1Point, int]]:
    """Zeros of the section on CP^1 with multiplicity; always p in total.

    Dehomogenizes in the chart with the larger leading coefficient,
    takes companion-matrix roots of the trimmed polynomial, and assigns
    the degree deficiency to the chart's point at infinity.
    """
    p = s.degree
    mono = s.coeffs * sym_basis_norms(p)  # monomial coefficients, z0-degree i
    scale = np.abs(mono).max()
    if scale == 0.0:
        raise CP1Error("zero section has no divisor")
    if p == 0:
        return []
    swap = abs(mono[0]) > abs(mono[-1])
    coeffs = mono[::-1].copy() if swap else mono.copy()
    # in the unswapped chart w = z0/z1: poly sum_i coeffs[i] w^i
    deg = max(i for i in range(p + 1) if abs(coeffs[i]) >= cutoff * scale)
    out: list[tuple[CP1Point, int]] = []
    if deg > 0:
        for w in np.roots(coeffs[deg::-1]):
            z0, z1 = (1.0 + 0j, w) if swap else (w, 1.0 + 0j)
            out.append((CP1Point.of(z0, z1), 1))
    if deg < p:
        inf_point = CP1Point.of(0, 1) if swap else CP1Point.of(1, 0)
        out.append((inf_point, p - deg))
    return out


# ---------------------------------------------------------------------------
# spherical harmonics (used by the averaging-operator cross-check)

def sphere_monomial_integral(a: int, b: int, c: int) -> Fraction:
    """Exact integral of n1^a n2^b n3^c over the unit sphere with the
    uniform probability measure."""
    if a % 2 or b % 2 or c % 2:
        return Fraction(0)
    num = _double_factorial(a - 1) * _double_factorial(b - 1) * _double_factorial(c - 1)
    return Fraction(num, _double_factorial(a + b + c + 1))


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def poly_sphere_inner(pa: dict, pb: dict) -> float:
    total = Fraction(0)
    for ka, va in pa.items():
        for kb, vb in pb.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            mom = sphere_monomial_integral(*k)
            if mom:
                total += Fraction(va) * Fraction(vb) * mom
    return float(total)


def harmonic_basis(q: int) -> list[SphereFunction]:
    """Orthonormal basis of the degree-q spherical harmonics (dim 2q+1),
    as polynomials in the sphere coordinates.

    Built from the homogeneous degree-q monomials by projecting out the
    (n1^2+n2^2+n3^2)-multiples of lower degree, with exact moments.
    """
    monos = [(a, b, q - a - b) for a in range(q + 1) for b in range(q - a + 1)]
    n_q = len(monos)
    gram = np.empty((n_q, n_q))
    for i, ma in enumerate(monos):
        for j, mb in enumerate(monos):
            gram[i, j] = float(sphere_monomial_integral(
                ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2]))
    if q >= 2:
        lower = [(a, b, q - 2 - a - b) for a in range(q - 1)
                 for b in range(q - 1 - a)]
        lift = np.zeros((len(lower), n_q))
        for r, (a, b, c) in enumerate(lower):
            for da, db, dc in ((2, 0, 0), (0, 2, 0), (0, 0, 2)):
                lift[r, monos.index((a + da, b + db, c + dc))] += 1.0
        # harmonics are Gram-orthogonal to every lifted lower monomial
        constraints = lift @ gram
        _, sv, vh = np.linalg.svd(constraints)
        null = vh[np.sum(sv > 1e-10 * sv[0]):].conj().T
    else:
        null = np.eye(n_q)
    if null.shape[1] != 2 * q + 1:
        raise CP1Error("harmonic dimension mismatch")  # pragma: no cover
    small = null.T @ gram @ null
    vals, vecs = np.linalg.eigh(small)
    ortho = null @ vecs / np.sqrt(vals)
    basis = []
    for col in range(2 * q + 1):
        terms = {monos[i]: float(ortho[i, col]) for i in range(n_q)
                 if abs(ortho[i, col]) > 1e-14}
        basis.append(SphereFunction(terms))
    return basis
