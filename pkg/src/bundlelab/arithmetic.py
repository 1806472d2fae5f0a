"""Arithmetic inputs for the Ramanujan vector bundles.

Quaternion generator sets A = {a : a0^2+a1^2+a2^2+a3^2 = p0, a0 odd
positive, a1,a2,a3 even}, their mod-p1 projective shadows, the matching
SU(2) elements, Cayley graphs over PGL2/PSL2(Z/p1 Z), and the symmetric
power representations Sym^p(C^2) in the orthonormal basis

    s_{p,i} = ((p+1) C(p,i))^(1/2) z0^i z1^(p-i),   i = 0..p,

ordered by ascending z0-degree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .bundles import FlatBundle, make_bundle
from .graphs import GraphError, RegularGraph, build_graph

__all__ = [
    "ArithmeticError_",
    "QuaternionGen",
    "quaternion_generators",
    "is_prime",
    "sqrt_minus_one",
    "legendre",
    "projective_matrix",
    "su2_of",
    "cayley_graph",
    "cayley_bundle",
    "cayley_bundle_from_reps",
    "sym_rep",
    "su2_character",
    "zero_one_check",
    "sym_basis_norms",
]


class ArithmeticError_(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class QuaternionGen:
    a0: int
    a1: int
    a2: int
    a3: int

    def conjugate(self) -> "QuaternionGen":
        return QuaternionGen(self.a0, -self.a1, -self.a2, -self.a3)

    def norm(self) -> int:
        return self.a0**2 + self.a1**2 + self.a2**2 + self.a3**2


def quaternion_generators(p0: int) -> list[QuaternionGen]:
    """All integer quadruples of norm p0 with a0 positive odd and a1..a3 even.

    Exhaustive enumeration; the result has p0 + 1 elements and is closed
    under quaternion conjugation.
    """
    if not is_prime(p0) or p0 % 4 != 1:
        raise ArithmeticError_(f"p0 = {p0} must be a prime congruent to 1 mod 4")
    bound = math.isqrt(p0)
    out = []
    for a0 in range(1, bound + 1, 2):
        rest = p0 - a0 * a0
        evens = range(-(bound - bound % 2), bound + 1, 2)
        for a1, a2 in product(evens, repeat=2):
            r2 = rest - a1 * a1 - a2 * a2
            if r2 < 0:
                continue
            a3 = math.isqrt(r2)
            if a3 * a3 == r2 and a3 % 2 == 0:
                if a3 == 0:
                    out.append(QuaternionGen(a0, a1, a2, 0))
                else:
                    out.append(QuaternionGen(a0, a1, a2, a3))
                    out.append(QuaternionGen(a0, a1, a2, -a3))
    out.sort(key=lambda a: (a.a0, a.a1, a.a2, a.a3))
    if len(out) != p0 + 1:
        raise ArithmeticError_(
            f"generator count {len(out)} != p0 + 1 = {p0 + 1}")
    return out


def sqrt_minus_one(p1: int) -> int:
    """Smallest b in (0, p1) with b^2 = -1 mod p1."""
    if not is_prime(p1) or p1 % 4 != 1:
        raise ArithmeticError_(f"no square root of -1 mod {p1}")
    for b in range(1, p1):
        if (b * b + 1) % p1 == 0:
            return b
    raise ArithmeticError_(f"no square root of -1 mod {p1}")  # unreachable


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) by the Euler criterion."""
    if not is_prime(p) or p == 2:
        raise ArithmeticError_(f"p = {p} must be an odd prime")
    a %= p
    if a == 0:
        raise ArithmeticError_("Legendre symbol of 0")
    r = pow(a, (p - 1) // 2, p)
    return 1 if r == 1 else -1


def _sqrt_mod(a: int, p: int) -> int:
    """Tonelli-Shanks square root mod an odd prime."""
    a %= p
    if a == 0:
        return 0
    if legendre(a, p) != 1:
        raise ArithmeticError_(f"{a} is not a square mod {p}")
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = next(z for z in range(2, p) if legendre(z, p) == -1)
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


Mat2 = tuple[int, int, int, int]  # row-major entries mod p1


def _mat_mul(a: Mat2, b: Mat2, p: int) -> Mat2:
    return ((a[0] * b[0] + a[1] * b[2]) % p, (a[0] * b[1] + a[1] * b[3]) % p,
            (a[2] * b[0] + a[3] * b[2]) % p, (a[2] * b[1] + a[3] * b[3]) % p)


def _canon_pgl(m: Mat2, p: int) -> Mat2:
    lead = next(v for v in m if v % p != 0)
    inv = pow(lead, p - 2, p)
    return tuple(v * inv % p for v in m)  # type: ignore[return-value]


def _canon_psl(m: Mat2, p: int) -> Mat2:
    # m must have det 1; quotient by +-I
    neg = tuple((p - v) % p for v in m)
    return min(m, neg)  # type: ignore[return-value]


def projective_matrix(a: QuaternionGen, p1: int) -> Mat2:
    """The mod-p1 shadow [[a0+b a1, a2+b a3], [-a2+b a3, a0-b a1]],
    canonicalized in PGL2(Z/p1 Z) (first nonzero entry scaled to 1)."""
    b = sqrt_minus_one(p1)
    m = ((a.a0 + b * a.a1) % p1, (a.a2 + b * a.a3) % p1,
         (-a.a2 + b * a.a3) % p1, (a.a0 - b * a.a1) % p1)
    det = (m[0] * m[3] - m[1] * m[2]) % p1
    if det == 0:
        raise ArithmeticError_("projective matrix is singular (p1 divides p0?)")
    return _canon_pgl(m, p1)


def su2_of(a: QuaternionGen, p0: int) -> np.ndarray:
    """The SU(2) element obtained by replacing b with sqrt(-1) and
    normalizing the determinant by 1/sqrt(p0)."""
    s = 1.0 / math.sqrt(p0)
    return s * np.array([[a.a0 + 1j * a.a1, a.a2 + 1j * a.a3],
                         [-a.a2 + 1j * a.a3, a.a0 - 1j * a.a1]], dtype=complex)


def cayley_graph(p0: int, p1: int, *, warn=None) -> RegularGraph:
    """Cayley graph of PGL2(Z/p1 Z) (if (p0/p1) = -1, bipartite) or
    PSL2(Z/p1 Z) (if +1) with respect to the quaternion generators.

    Vertices carry canonical matrix labels; the graph is
    (p0+1)-regular, connected, and vertex-transitive.  A warning is
    issued via ``warn`` when p1 <= 2 sqrt(p0) (multi-edges possible).
    """
    if p0 == p1:
        raise ArithmeticError_("p0 and p1 must be distinct")
    gens_q = quaternion_generators(p0)
    sym = legendre(p0, p1)
    if p1 <= 2 * math.sqrt(p0) and warn is not None:
        warn(f"p1 = {p1} <= 2 sqrt(p0) = {2 * math.sqrt(p0):.2f}; "
             "the Cayley graph may have multi-edges")

    if sym == -1:
        group = "PGL2"
        canon = lambda m: _canon_pgl(m, p1)
        gens = [canon(projective_matrix(a, p1)) for a in gens_q]
        expected = p1 * (p1 * p1 - 1)
    else:
        group = "PSL2"
        canon = lambda m: _canon_psl(m, p1)
        # scale each generator to determinant 1 (its determinant is in the
        # square class of p0, a square mod p1 on this branch)
        gens = []
        for a in gens_q:
            m = projective_matrix(a, p1)
            det = (m[0] * m[3] - m[1] * m[2]) % p1
            scale_inv = pow(_sqrt_mod(det, p1), p1 - 2, p1)
            m1 = tuple(v * scale_inv % p1 for v in m)
            gens.append(canon(m1))  # type: ignore[arg-type]
        expected = p1 * (p1 * p1 - 1) // 2

    pair = [gens_q.index(a.conjugate()) for a in gens_q]
    d = p0 + 1

    identity = canon((1, 0, 0, 1))
    index = {identity: 0}
    order: list[Mat2] = [identity]
    frontier = [identity]
    while frontier:
        nxt = []
        for v in frontier:
            for g in gens:
                w = canon(_mat_mul(g, v, p1))
                if w not in index:
                    index[w] = len(order)
                    order.append(w)
                    nxt.append(w)
        frontier = nxt
    if len(order) != expected:
        raise ArithmeticError_(
            f"group enumeration produced {len(order)} elements, expected {expected}")

    oriented = []
    for vi, v in enumerate(order):
        for gi, g in enumerate(gens):
            head = index[canon(_mat_mul(g, v, p1))]
            eid = vi * d + gi
            rid = head * d + pair[gi]
            oriented.append((head, vi, eid, rid))
    graph = build_graph(d, oriented, vertex_transitive=True, labels=order)
    object.__setattr__(graph, "_cayley_meta", {
        "p0": p0, "p1": p1, "group": group, "b": sqrt_minus_one(p1),
        "bipartite": sym == -1, "generator_pairing": pair,
    })
    return graph


def sym_basis_norms(p: int) -> np.ndarray:
    """Normalization constants ((p+1) C(p,i))^(1/2) of the orthonormal basis."""
    return np.array([math.sqrt((p + 1) * math.comb(p, i)) for i in range(p + 1)])


def sym_rep(g: np.ndarray, p: int) -> np.ndarray:
    """Matrix of g acting on Sym^p(C^2) by (g s)(z) = s(g^{-1} z).

    Computed by exact binomial expansion of s_{p,i}(g^{-1} z) in the
    monomial basis and re-expression in the orthonormal basis; the
    entry [j, i] is the coefficient of s_{p,j} in g s_{p,i}.
    """
    if p == 0:
        return np.ones((1, 1), dtype=complex)
    ginv = g.conj().T  # unitary with det 1
    # the binomial sums cancel heavily for large p; extended precision
    # keeps the 1e-10 character identity at p = 50
    idx = np.arange(p + 1)
    apow = np.clongdouble(ginv[0, 0]) ** idx
    bpow = np.clongdouble(ginv[0, 1]) ** idx
    cpow = np.clongdouble(ginv[1, 0]) ** idx
    dpow = np.clongdouble(ginv[1, 1]) ** idx
    binom_p = [math.comb(p, i) for i in range(p + 1)]
    mat = np.zeros((p + 1, p + 1), dtype=np.clongdouble)
    for i in range(p + 1):
        # (alpha z0 + beta z1)^i (gamma z0 + delta z1)^(p-i)
        for r in range(i + 1):
            for s in range(p - i + 1):
                j = r + s
                # exact integer binomials; Vandermonde keeps the product
                # below C(p, j)
                c = (np.longdouble(math.comb(i, r) * math.comb(p - i, s))
                     * np.sqrt(np.longdouble(binom_p[i])
                               / np.longdouble(binom_p[j])))
                mat[j, i] += c * apow[r] * bpow[i - r] * cpow[s] * dpow[p - i - s]
    return mat.astype(complex)


def su2_character(g: np.ndarray, p: int) -> float:
    """Weyl character of Sym^p at g: sin((p+1)theta)/sin(theta) with
    2 cos(theta) = tr(g), including the theta -> 0, pi limits.

    Evaluated through the equivalent three-term recurrence in
    cos(theta), which stays accurate where the sine quotient loses
    digits; the trigonometric form is used as a cross-check in tests
    away from the spectral edge.
    """
    t = float(np.trace(g).real) / 2.0
    u_prev, u = 1.0, 2.0 * t
    if p == 0:
        return u_prev
    for _ in range(p - 1):
        u_prev, u = u, 2.0 * t * u - u_prev
    return u


def zero_one_check(g: np.ndarray, p_list, tol: float = 1e-9) -> dict:
    """Normalized character decay table for a non-central g.

    Returns per-p values |chi_p(g)|/(p+1) together with the exact bound
    1/((p+1)|sin theta|).  Central elements are rejected: there the
    normalized trace has modulus one for every p.
    """
    half_tr = float(np.trace(g).real) / 2.0
    if abs(half_tr) >= 1.0 - tol:
        raise ArithmeticError_("central element: normalized trace stays on "
                               "the unit circle")
    theta = math.acos(half_tr)
    rows = []
    for p in p_list:
        val = abs(su2_character(g, p)) / (p + 1)
        bound = 1.0 / ((p + 1) * math.sin(theta))
        rows.append({"p": p, "value": val, "bound": bound,
                     "ok": val <= bound + 1e-12})
    return {"theta": theta, "rows": rows, "all_ok": all(r["ok"] for r in rows)}


def cayley_bundle_from_reps(p0: int, p1: int, reps, *, warn=None,
                            meta_extra=None) -> FlatBundle:
    """Bundle over the (p0, p1) Cayley graph whose transport on the
    oriented edge (a.x <- x) is the given unitary for generator a;
    ``reps`` is indexed like :func:`quaternion_generators` and must send
    conjugate generators to inverse matrices."""
    graph = cayley_graph(p0, p1, warn=warn)
    d = p0 + 1
    transports = {}
    for vi in range(graph.vertex_count):
        for gi in range(d):
            eid = vi * d + gi
            if eid < int(graph.reversal[eid]):
                transports[eid] = reps[gi]
    bundle = make_bundle(graph, transports)
    meta = dict(getattr(graph, "_cayley_meta", {}))
    if meta_extra:
        meta.update(meta_extra)
    object.__setattr__(bundle, "_cayley_meta", meta)
    return bundle


def cayley_bundle(p0: int, p1: int, p: int, *, warn=None) -> FlatBundle:
    """The Cayley vector bundle: fiber Sym^p(C^2), transport on the
    oriented edge (a.x <- x) given by sym_rep of the SU(2) generator."""
    if p < 0:
        raise ArithmeticError_("p must be nonnegative")
    gens_q = quaternion_generators(p0)
    reps = [sym_rep(su2_of(a, p0), p) for a in gens_q]
    return cayley_bundle_from_reps(p0, p1, reps, warn=warn,
                                   meta_extra={"p": p})
