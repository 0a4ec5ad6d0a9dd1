"""EPPA witness for n-partite tournaments.

Same product shape as the graph construction, with directed edges: a
witness vertex (x, chi) carries a Z2 valuation of the vertices outside
x's part, and the arc between (x, chi) and (y, xi) from different parts
runs from the higher base vertex iff chi[y] + xi[x] = 1.

The relabel automorphisms compensate order inversions by flipping the
corresponding valuation entry; this is what makes them orientation
preserving, and also what makes the family non-coherent (squaring a
relabel is generally a nonempty product of pair flips).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .errors import InputError, InternalCheckError
from .structures import (
    Embedding,
    PartialMap,
    PartitionedTournament,
    complete_part_preserving,
    is_partial_automorphism,
    pad_to_equal_parts,
    validate,
)


def bit(mask: int, i: int) -> int:
    return (mask >> i) & 1


@dataclass(frozen=True)
class Witness:
    """Implicit-rule witness over a padded base; vertices materialized."""

    base: PartitionedTournament
    origin: tuple[int, ...]

    @cached_property
    def vertices(self) -> tuple[tuple[int, int], ...]:
        out = []
        n = self.base.n
        for x in range(n):
            excluded = self.base.part_masks[self.base.part_of[x]]
            free = [y for y in range(n) if not (excluded >> y) & 1]
            for compact in range(1 << len(free)):
                chi = 0
                for idx, y in enumerate(free):
                    if (compact >> idx) & 1:
                        chi |= 1 << y
                out.append((x, chi))
        return tuple(out)

    @cached_property
    def index(self) -> dict[tuple[int, int], int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @property
    def n(self) -> int:
        return len(self.vertices)

    def orientation(self, a: tuple[int, int], b: tuple[int, int]) -> int:
        """+1 for an arc a -> b, -1 for b -> a, 0 within a part."""
        (x, chi), (y, xi) = a, b
        if self.base.same_part(x, y):
            return 0
        s = bit(chi, y) ^ bit(xi, x)
        if x > y:
            return 1 if s == 1 else -1
        return 1 if s == 0 else -1

    def pair_code(self, i: int, j: int) -> int:
        a, b = self.vertices[i], self.vertices[j]
        return (2 if self.base.same_part(a[0], b[0]) else 0) * 4 + self.orientation(a, b) + 1

    def as_tournament(self) -> PartitionedTournament:
        arcs = []
        verts = self.vertices
        for i, j in itertools.combinations(range(self.n), 2):
            o = self.orientation(verts[i], verts[j])
            if o == 1:
                arcs.append((i, j))
            elif o == -1:
                arcs.append((j, i))
        return PartitionedTournament.build(
            self.n, (self.base.part_of[x] for x, _ in verts), arcs)


class Relabel:
    """(x, chi) -> (pi(x), chi') for a part-preserving base bijection pi;
    entries on order-inverted pairs are flipped."""

    def __init__(self, witness: Witness, perm: tuple[int, ...]):
        base = witness.base
        if sorted(perm) != list(range(base.n)):
            raise InputError("perm is not a bijection of the base set")
        for u, v in itertools.combinations(range(base.n), 2):
            if base.same_part(u, v) != base.same_part(perm[u], perm[v]):
                raise InputError("perm is not part-preserving")
        self.witness = witness
        self.perm = tuple(perm)

    def apply(self, vert: tuple[int, int]) -> tuple[int, int]:
        x, chi = vert
        base = self.witness.base
        perm = self.perm
        px = perm[x]
        excluded = base.part_masks[base.part_of[x]]
        new_chi = 0
        for y in range(base.n):
            if (excluded >> y) & 1:
                continue
            v = bit(chi, y) ^ (1 if (x < y and px > perm[y]) else 0)
            if v:
                new_chi |= 1 << perm[y]
        return (px, new_chi)

    def inverse(self):
        return _InverseRelabel(self)


class _InverseRelabel:
    """Exact inverse of a Relabel (not itself a plain relabel: the flip
    pattern of the forward map must be undone in source coordinates)."""

    def __init__(self, fwd: Relabel):
        self.fwd = fwd
        self.witness = fwd.witness
        inv = [0] * len(fwd.perm)
        for i, p in enumerate(fwd.perm):
            inv[p] = i
        self.perm_inv = tuple(inv)

    def apply(self, vert: tuple[int, int]) -> tuple[int, int]:
        px, new_chi = vert
        perm = self.fwd.perm
        x = self.perm_inv[px]
        n = self.witness.base.n
        excluded = self.witness.base.part_masks[self.witness.base.part_of[x]]
        chi = 0
        for y in range(n):
            if (excluded >> y) & 1:
                continue
            v = bit(new_chi, perm[y]) ^ (1 if (x < y and perm[x] > perm[y]) else 0)
            if v:
                chi |= 1 << y
        return (x, chi)

    def inverse(self) -> Relabel:
        return self.fwd


class FlipPair:
    """Involution flipping the mutual entries of a cross-part pair u < v."""

    def __init__(self, witness: Witness, u: int, v: int):
        if not (0 <= u < v < witness.base.n):
            raise InputError("need base vertices u < v")
        if witness.base.same_part(u, v):
            raise InputError("flip pair must join different parts")
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
            if w.orientation(verts[i], verts[j]) != w.orientation(verts[perm[i]], verts[perm[j]]):
                return False
        return True


def relabel(witness: Witness, perm: Iterable[int]) -> WitnessAutomorphism:
    return WitnessAutomorphism(witness, (Relabel(witness, tuple(perm)),))


def flip_pair(witness: Witness, u: int, v: int) -> WitnessAutomorphism:
    return WitnessAutomorphism(witness, (FlipPair(witness, u, v),))


def psi_valuation(base: PartitionedTournament, x: int) -> int:
    chi = 0
    for y in range(x):
        if not base.same_part(x, y) and base.digraph.has_arc(x, y):
            chi |= 1 << y
    return chi


def build_witness(structure: PartitionedTournament) -> tuple[Witness, Embedding]:
    """Pad the input to equal part sizes, build the witness for the padded
    base, and return it with the embedding restricted to original ids."""
    report = validate(structure, "npartite")
    if not report.ok:
        raise InputError(f"input is not an n-partite tournament: {report.violations[0].detail}")
    padded, origin = pad_to_equal_parts(structure)
    w = Witness(padded, origin)
    full = full_psi(w)
    images = tuple(full.images[x] for x in range(structure.n))
    emb = Embedding.verified(structure, w, images)
    return w, emb


def full_psi(witness: Witness) -> Embedding:
    """Embedding of the padded base into the witness (as witness ids)."""
    base = witness.base
    return Embedding(tuple(
        witness.index[(x, psi_valuation(base, x))] for x in range(base.n)))


def extend(witness: Witness, phi: PartialMap) -> WitnessAutomorphism:
    """Extend a partial automorphism of the embedded copy to the witness.

    `phi` maps witness vertex ids lying inside the image of the base
    embedding.  Restriction to Dom(phi) is checked exactly.
    """
    w = witness
    psi = full_psi(w)
    back = {img: x for x, img in enumerate(psi.images)}
    for u, v in phi.pairs:
        if u not in back or v not in back:
            raise InputError("phi must live inside the embedded copy")
    base_map = PartialMap.from_pairs((back[u], back[v]) for u, v in phi.pairs)
    if not is_partial_automorphism(w.base, base_map):
        raise InputError("phi is not a partial automorphism of the embedded copy")

    phi_hat = complete_part_preserving(w.base, base_map)
    rel = Relabel(w, phi_hat)
    base = w.base
    dom = set(base_map.domain)

    def psi_vert(x: int) -> tuple[int, int]:
        return w.vertices[psi.images[x]]

    flips = []
    for u, v in itertools.combinations(range(base.n), 2):
        if base.same_part(u, v):
            continue
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
