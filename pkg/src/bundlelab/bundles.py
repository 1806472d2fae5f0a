"""Unitary flat vector bundles over regular graphs and their twisted Laplacians.

A bundle assigns to each oriented edge a unitary transport matrix
mapping the tail fiber to the head fiber, with the reversal carrying
the inverse transport.  The twisted Laplacian acts on sections by
``(Delta u)(x) = sum over edges into x of transport(e) u(tail(e))``;
a self-loop contributes both half-edges, g + g^{-1}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graphs import (GraphError, RegularGraph, enumerate_closed_walks,
                     graph_from_json, graph_to_json, spanning_tree)

__all__ = [
    "BundleError",
    "FlatBundle",
    "GaugeTransform",
    "make_bundle",
    "trivial_bundle",
    "random_bundle",
    "laplacian_matrix",
    "holonomy",
    "trace_power_oracle",
    "gauge_trivialize",
    "endomorphism_bundle",
    "bundle_to_json",
    "bundle_from_json",
    "save_bundle",
    "load_bundle",
]

UNITARY_TOL = 1e-12


class BundleError(ValueError):
    pass


def _check_unitary(mat: np.ndarray, what: str, tol: float = UNITARY_TOL) -> None:
    ell = mat.shape[0]
    defect = np.linalg.norm(mat.conj().T @ mat - np.eye(ell))
    if defect > tol:
        raise BundleError(f"{what} is not unitary (defect {defect:.2e})")


@dataclass(frozen=True)
class FlatBundle:
    """graph + fiber dimension + one unitary per oriented edge.

    ``transport[e]`` maps the fiber at ``tails[e]`` to the fiber at
    ``heads[e]``; ``transport[reversal[e]] == transport[e]^{-1}``.
    Total space dimension is fiber_dim * vertex_count.
    """

    graph: RegularGraph
    fiber_dim: int
    transport: np.ndarray  # (2m, ell, ell) complex

    def __post_init__(self):
        g = self.graph
        t = self.transport
        if t.shape != (g.oriented_edge_count, self.fiber_dim, self.fiber_dim):
            raise BundleError(f"transport array has shape {t.shape}")
        for e in range(g.oriented_edge_count):
            _check_unitary(t[e], f"transport on edge {e}")
            r = int(g.reversal[e])
            if np.linalg.norm(t[r] - t[e].conj().T) > UNITARY_TOL * 10:
                raise BundleError(f"transport on edge {r} is not the inverse of edge {e}")

    @property
    def total_dim(self) -> int:
        return self.fiber_dim * self.graph.vertex_count


@dataclass(frozen=True)
class GaugeTransform:
    """Per-vertex unitaries psi_x."""

    matrices: np.ndarray  # (|X|, ell, ell)

    def __post_init__(self):
        for x in range(self.matrices.shape[0]):
            _check_unitary(self.matrices[x], f"gauge at vertex {x}")


def make_bundle(graph: RegularGraph, transports: dict[int, np.ndarray]) -> FlatBundle:
    """Build a bundle from transports given on one orientation per edge.

    ``transports`` maps edge id -> unitary matrix; the reverse
    orientation is filled in as the conjugate transpose.  Supplying both
    orientations is allowed when consistent.
    """
    if not transports:
        raise BundleError("no transports given")
    ell = next(iter(transports.values())).shape[0]
    n_edges = graph.oriented_edge_count
    arr = np.full((n_edges, ell, ell), np.nan, dtype=complex)
    for eid, mat in transports.items():
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != (ell, ell):
            raise BundleError(f"transport on edge {eid} has shape {mat.shape}, "
                              f"expected ({ell}, {ell})")
        _check_unitary(mat, f"transport on edge {eid}")
        rid = int(graph.reversal[eid])
        if not np.isnan(arr[eid]).all():
            if np.linalg.norm(arr[eid] - mat) > UNITARY_TOL * 10:
                raise BundleError(f"inconsistent transports on edge {eid}")
        arr[eid] = mat
        if rid not in transports:
            arr[rid] = mat.conj().T
    if np.isnan(arr).any():
        missing = [e for e in range(n_edges) if np.isnan(arr[e]).any()]
        raise BundleError(f"missing transports for edges {missing[:5]}")
    return FlatBundle(graph, ell, arr)


def trivial_bundle(graph: RegularGraph, fiber_dim: int = 1) -> FlatBundle:
    eye = np.eye(fiber_dim, dtype=complex)
    arr = np.broadcast_to(eye, (graph.oriented_edge_count, fiber_dim, fiber_dim)).copy()
    return FlatBundle(graph, fiber_dim, arr)


def haar_unitary(ell: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((ell, ell)) + 1j * rng.standard_normal((ell, ell)))
    q, r = np.linalg.qr(z)
    phase = np.diag(r).copy()
    phase /= np.abs(phase)
    return q * phase


def random_bundle(graph: RegularGraph, fiber_dim: int, seed: int) -> FlatBundle:
    """Per-edge Haar unitaries, deterministic under the seed.

    Edges are filled in canonical orientation order (smaller edge id of
    each reversal pair).
    """
    rng = np.random.default_rng(seed)
    transports = {}
    for e in range(graph.oriented_edge_count):
        if e < int(graph.reversal[e]):
            transports[e] = haar_unitary(fiber_dim, rng)
    return make_bundle(graph, transports)


def laplacian_matrix(bundle: FlatBundle) -> np.ndarray:
    """Hermitian matrix of the twisted Laplacian, vertex-major blocks."""
    g, ell = bundle.graph, bundle.fiber_dim
    n = bundle.total_dim
    mat = np.zeros((n, n), dtype=complex)
    for e in range(g.oriented_edge_count):
        h, t = int(g.heads[e]), int(g.tails[e])
        mat[h * ell:(h + 1) * ell, t * ell:(t + 1) * ell] += bundle.transport[e]
    return mat


def holonomy(bundle: FlatBundle, walk) -> np.ndarray:
    """Ordered transport product along a closed walk (edge-id sequence).

    The walk runs e_1, ..., e_k head-to-tail; the holonomy is
    phi(e_k) ... phi(e_1), an endomorphism of the base fiber.
    """
    g = bundle.graph
    walk = tuple(walk)
    if not walk:
        return np.eye(bundle.fiber_dim, dtype=complex)
    for a, b in zip(walk, walk[1:]):
        if int(g.heads[a]) != int(g.tails[b]):
            raise BundleError(f"walk breaks between edges {a} and {b}")
    if int(g.heads[walk[-1]]) != int(g.tails[walk[0]]):
        raise BundleError("walk is not closed")
    out = np.eye(bundle.fiber_dim, dtype=complex)
    for e in walk:
        out = bundle.transport[e] @ out
    return out


def trace_power_oracle(bundle: FlatBundle, k: int, budget: int = 10**7) -> float:
    """Loop-holonomy side of the trace formula:
    sum over vertices x and closed length-k walks at x of tr(holonomy)."""
    total = 0.0 + 0.0j
    for x in range(bundle.graph.vertex_count):
        for walk in enumerate_closed_walks(bundle.graph, x, k, budget=budget):
            total += np.trace(holonomy(bundle, walk))
    return float(total.real)


def gauge_trivialize(bundle: FlatBundle, tree: list[int] | None = None,
                     root: int = 0) -> tuple[FlatBundle, GaugeTransform]:
    """Gauge-equivalent bundle with identity transport on every tree edge.

    ``tree`` is a list of tree edge ids oriented parent -> child as
    produced by :func:`spanning_tree`.  The returned gauge satisfies
    psi_head phi = phi' psi_tail on every edge.
    """
    g, ell = bundle.graph, bundle.fiber_dim
    if tree is None:
        tree = spanning_tree(g, root)
    if len(tree) != g.vertex_count - 1:
        raise BundleError("tree edge set has the wrong size")
    psi = np.full((g.vertex_count, ell, ell), np.nan, dtype=complex)
    psi[root] = np.eye(ell)
    # tree edges are in BFS order, so tails are resolved before heads
    for e in tree:
        t, h = int(g.tails[e]), int(g.heads[e])
        if np.isnan(psi[t]).any():
            raise BundleError("tree edges are not in root-first order")
        if not np.isnan(psi[h]).any():
            raise BundleError(f"edge {e} revisits vertex {h}: not a tree")
        # transport from h back to the root: via t
        psi[h] = psi[t] @ bundle.transport[e].conj().T
    if np.isnan(psi).any():
        raise BundleError("tree does not span the graph")
    new = np.empty_like(bundle.transport)
    for e in range(g.oriented_edge_count):
        h, t = int(g.heads[e]), int(g.tails[e])
        new[e] = psi[h] @ bundle.transport[e] @ psi[t].conj().T
    return FlatBundle(g, ell, new), GaugeTransform(psi)


def endomorphism_bundle(bundle: FlatBundle) -> FlatBundle:
    """Bundle with fiber End(C^ell) and transport A -> phi A phi^{-1}.

    In the standard (row-major vec) basis of End the transport matrix
    is kron(phi, conj(phi)), unitary of size ell^2.
    """
    ell = bundle.fiber_dim
    n_edges = bundle.graph.oriented_edge_count
    arr = np.empty((n_edges, ell * ell, ell * ell), dtype=complex)
    for e in range(n_edges):
        phi = bundle.transport[e]
        arr[e] = np.kron(phi, phi.conj())
    return FlatBundle(bundle.graph, ell * ell, arr)


def bundle_to_json(bundle: FlatBundle) -> dict:
    """JSON form; transports stored on the canonical orientation only
    (the smaller edge id of each reversal pair), row-major [re, im] pairs."""
    g = bundle.graph
    transports = {}
    for e in range(g.oriented_edge_count):
        if e < int(g.reversal[e]):
            mat = bundle.transport[e]
            transports[str(e)] = [[float(z.real), float(z.imag)]
                                  for z in mat.ravel()]
    out = {"graph": graph_to_json(g), "l": bundle.fiber_dim,
           "transports": transports}
    meta = getattr(bundle, "_cayley_meta", None)
    if meta is not None:
        out["meta"] = meta
    return out


def bundle_from_json(obj: dict) -> FlatBundle:
    g = graph_from_json(obj["graph"])
    ell = obj["l"]
    transports = {}
    for key, flat in obj["transports"].items():
        mat = np.array([complex(re, im) for re, im in flat],
                       dtype=complex).reshape(ell, ell)
        transports[int(key)] = mat
    bundle = make_bundle(g, transports)
    if obj.get("meta") is not None:
        object.__setattr__(bundle, "_cayley_meta", obj["meta"])
    return bundle


def save_bundle(bundle: FlatBundle, path) -> None:
    with open(path, "w") as fh:
        json.dump(bundle_to_json(bundle), fh, sort_keys=True)


def load_bundle(path) -> FlatBundle:
    with open(path) as fh:
        return bundle_from_json(json.load(fh))
