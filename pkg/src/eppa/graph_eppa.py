"""EPPA witness for finite graphs (the warm-up construction).

Witness vertices are pairs (x, chi) where x is a base vertex and chi is a
Z2 valuation of the other base vertices, held as an n-bit mask whose bit x
is always zero.  Two witness vertices (x, chi), (y, xi) with x != y are
adjacent iff chi[y] + xi[x] = 0.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

from .errors import InputError, InternalCheckError
from .structures import Embedding, PartialMap, is_partial_automorphism


@dataclass(frozen=True)
class Graph:
    """Undirected graph on vertices 0..n-1; edges as sorted pairs."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        for u, v in self.edges:
            if not (0 <= u < v < self.n):
                raise InputError(f"bad edge ({u},{v})")

    @staticmethod
    def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        return Graph(n, frozenset((min(u, v), max(u, v)) for u, v in edges))

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def pair_code(self, u: int, v: int) -> int:
        return 1 if self.has_edge(u, v) else 0


def bit(mask: int, i: int) -> int:
    return (mask >> i) & 1


@dataclass(frozen=True)
class Witness:
    """The n * 2^(n-1) vertex graph whose shape depends only on n."""

    base_n: int

    @cached_property
    def vertices(self) -> tuple[tuple[int, int], ...]:
        out = []
        n = self.base_n
        for x in range(n):
            low = (1 << x) - 1
            for compact in range(1 << (n - 1)):
                # insert a zero bit at slot x
                out.append((x, (compact & low) | ((compact & ~low) << 1)))
        return tuple(out)

    @cached_property
    def index(self) -> dict[tuple[int, int], int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @property
    def n(self) -> int:
        return len(self.vertices)

    def adjacent(self, a: tuple[int, int], b: tuple[int, int]) -> bool:
        (x, chi), (y, xi) = a, b
        return x != y and (bit(chi, y) ^ bit(xi, x)) == 0

    def pair_code(self, i: int, j: int) -> int:
        return 1 if self.adjacent(self.vertices[i], self.vertices[j]) else 0

    def as_graph(self) -> Graph:
        verts = self.vertices
        return Graph.from_edges(self.n, (
            (i, j) for i, j in itertools.combinations(range(self.n), 2)
            if self.adjacent(verts[i], verts[j])))


class Relabel:
    """Automorphism (x, chi) -> (pi(x), chi o pi^-1) for a base bijection pi."""

    def __init__(self, witness: Witness, perm: tuple[int, ...]):
        if sorted(perm) != list(range(witness.base_n)):
            raise InputError("perm is not a bijection of the base set")
        self.witness = witness
        self.perm = tuple(perm)

    def apply(self, v: tuple[int, int]) -> tuple[int, int]:
        x, chi = v
        perm = self.perm
        new_chi = 0
        m = chi
        while m:
            low = m & -m
            new_chi |= 1 << perm[low.bit_length() - 1]
            m ^= low
        return (perm[x], new_chi)

    def inverse(self) -> "Relabel":
        inv = [0] * len(self.perm)
        for i, p in enumerate(self.perm):
            inv[p] = i
        return Relabel(self.witness, tuple(inv))


class FlipPair:
    """Involution flipping the mutual valuation entries of base pair u < v."""

    def __init__(self, witness: Witness, u: int, v: int):
        if not (0 <= u < v < witness.base_n):
            raise InputError("need base vertices u < v")
        self.witness = witness
        self.u = u
        self.v = v

    def apply(self, vert: tuple[int, int]) -> tuple[int, int]:
        x, chi = vert
        if x == self.u:
            chi ^= 1 << self.v
        elif x == self.v:
            chi ^= 1 << self.u
        return (x, chi)

    def inverse(self) -> "FlipPair":
        return self


@dataclass(frozen=True)
class WitnessAutomorphism:
    """Composition of generators, rightmost applied first."""

    witness: Witness
    generators: tuple

    def apply(self, v: tuple[int, int]) -> tuple[int, int]:
        for g in reversed(self.generators):
            v = g.apply(v)
        return v

    def inverse(self) -> "WitnessAutomorphism":
        return WitnessAutomorphism(self.witness, tuple(g.inverse() for g in reversed(self.generators)))

    def as_index_permutation(self) -> tuple[int, ...]:
        w = self.witness
        return tuple(w.index[self.apply(v)] for v in w.vertices)

    def is_automorphism(self) -> bool:
        w = self.witness
        perm = self.as_index_permutation()
        if sorted(perm) != list(range(w.n)):
            return False
        verts = w.vertices
        for i, j in itertools.combinations(range(w.n), 2):
            if w.adjacent(verts[i], verts[j]) != w.adjacent(verts[perm[i]], verts[perm[j]]):
                return False
        return True


def relabel(witness: Witness, perm: Iterable[int]) -> WitnessAutomorphism:
    return WitnessAutomorphism(witness, (Relabel(witness, tuple(perm)),))


def flip_pair(witness: Witness, u: int, v: int) -> WitnessAutomorphism:
    return WitnessAutomorphism(witness, (FlipPair(witness, u, v),))


def psi_valuation(graph: Graph, x: int) -> int:
    """Valuation of the embedded copy of x: bit y set iff x > y and {x,y}
    is a non-edge."""
    chi = 0
    for y in range(x):
        if not graph.has_edge(x, y):
            chi |= 1 << y
    return chi


def build_witness(graph: Graph) -> tuple[Witness, Embedding]:
    """Witness plus the verified embedding x -> (x, chi_x) (as witness ids)."""
    w = Witness(graph.n)
    images = tuple(w.index[(x, psi_valuation(graph, x))] for x in range(graph.n))
    emb = Embedding.verified(graph, w, images)
    return w, emb


def extend(witness: Witness, psi: Embedding, phi: PartialMap) -> WitnessAutomorphism:
    """Extend a partial automorphism of the embedded copy to the witness.

    `phi` maps witness vertex ids inside psi's image.  The result is the
    relabel along a completed base bijection, pre-composed with the flips
    of the mismatch set F; its restriction to Dom(phi) is checked exactly.
    """
    w = witness
    image_set = set(psi.images)
    back = {img: x for x, img in enumerate(psi.images)}
    for u, v in phi.pairs:
        if u not in image_set or v not in image_set:
            raise InputError("phi must live inside the embedded copy")
    if not is_partial_automorphism(w, phi):
        raise InputError("phi is not a partial automorphism of the witness")

    base_map = PartialMap.from_pairs((back[u], back[v]) for u, v in phi.pairs)
    phi_hat = complete_bijection(base_map, w.base_n)

    def psi_vert(x: int) -> tuple[int, int]:
        return w.vertices[psi.images[x]]

    rel = Relabel(w, phi_hat)
    dom = set(base_map.domain)
    flips = []
    for u, v in itertools.combinations(range(w.base_n), 2):
        in_f = None
        if u in dom:
            img_chi = rel.apply(psi_vert(u))[1]
            target_chi = psi_vert(base_map(u))[1]
            in_f = bit(img_chi, phi_hat[v]) != bit(target_chi, phi_hat[v])
        if v in dom:
            img_chi = rel.apply(psi_vert(v))[1]
            target_chi = psi_vert(base_map(v))[1]
            other = bit(img_chi, phi_hat[u]) != bit(target_chi, phi_hat[u])
            if in_f is not None and other != in_f:
                raise InternalCheckError(
                    f"mismatch sets disagree between the endpoints of ({u},{v})")
            in_f = other if in_f is None else in_f
        if in_f:
            flips.append(FlipPair(w, u, v))

    theta = WitnessAutomorphism(w, (rel, *flips))
    for u, v in phi.pairs:
        if w.index[theta.apply(w.vertices[u])] != v:
            raise InternalCheckError("extension does not restrict to phi")
    return theta


def complete_bijection(p: PartialMap, n: int) -> tuple[int, ...]:
    """Extend a partial injection on 0..n-1 to a bijection, matching the
    unmatched sources to the unmatched targets in increasing id order."""
    out = [-1] * n
    taken = set(p.range)
    for u, v in p.pairs:
        out[u] = v
    free_targets = iter(v for v in range(n) if v not in taken)
    for u in range(n):
        if out[u] < 0:
            out[u] = next(free_targets)
    return tuple(out)
