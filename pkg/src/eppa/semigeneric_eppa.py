"""Implicit EPPA witness for semigeneric tournaments.

The witness is far too large to materialize in general (its vertex count is
n * 2^n * 2^(k*2^n) for a base with n vertices and k parts), so it is kept
as a handle: a part index set Q of pairs (part id, part valuation), an
on-demand edge predicate, and symbolic automorphisms.

Part valuations h: A -> Z2 are n-bit masks (bit i = h at base vertex i).
They are ordered by "first differing bit, zero first", which coincides
with integer order of the bit-reversed mask; Q is ordered by part id and
then by that valuation order, and positions in this canonical enumeration
index the vertex valuation masks chi: Q -> Z2.

A witness vertex is the triple (part id, h, base vertex, chi).  For
vertices x, y in distinct parts of Q,

    V(x, y) = chi_x[q_y] + h_x[v_y] + chi_y[q_x] + h_y[v_x]   (in Z2)

and the arc runs from the Q-smaller vertex iff V = 0.

Symbolic automorphisms expose both full application and O(#generators)
pulls of a single chi bit, so orientation checks on sampled pairs stay
cheap even when chi masks are thousands of bits long.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

from .errors import CapacityError, InputError, InternalCheckError
from .structures import (
    Embedding,
    PartialMap,
    PartitionedTournament,
    complete_part_preserving,
    is_partial_automorphism,
    pad_to_equal_parts,
    validate,
)

DEFAULT_Q_CAP = 4096
DEFAULT_MAT_CAP = 10**6


class SemiVertex(NamedTuple):
    part: int
    h: int
    v: int
    chi: int


Meta = tuple[int, int, int]  # (part, h, v) without the chi mask


def bit(mask: int, i: int) -> int:
    return (mask >> i) & 1


class WitnessHandle:
    """Lazy witness for a padded semigeneric base structure."""

    def __init__(self, base: PartitionedTournament, origin: tuple[int, ...],
                 q_cap: int = DEFAULT_Q_CAP):
        self.base = base
        self.origin = origin
        self.n = base.n
        self.k = base.k
        self.nQ = self.k << self.n
        if self.nQ > q_cap:
            raise CapacityError(
                f"|Q| = {self.nQ} exceeds the handle cap {q_cap}", required=self.nQ)
        rev = [0] * (1 << self.n)
        for h in range(1, 1 << self.n):
            rev[h] = (rev[h >> 1] >> 1) | ((h & 1) << (self.n - 1))
        self.rev = tuple(rev)
        self.reps = tuple(members[0] for members in base.parts)

    # ---- the order on Q and positions in its canonical enumeration ----

    def val_before(self, g: int, h: int) -> bool:
        """Valuation order: g before h iff g is 0 at the least differing bit."""
        return self.rev[g] < self.rev[h]

    def qpos(self, part: int, h: int) -> int:
        return (part << self.n) | self.rev[h]

    def q_at(self, pos: int) -> tuple[int, int]:
        return pos >> self.n, self.rev[pos & ((1 << self.n) - 1)]

    def q_before(self, q1: tuple[int, int], q2: tuple[int, int]) -> bool:
        return self.qpos(*q1) < self.qpos(*q2)

    def iter_q(self):
        for pos in range(self.nQ):
            yield self.q_at(pos)

    # ---- edge predicate ----

    def V(self, x: SemiVertex, y: SemiVertex) -> int:
        return (bit(x.chi, self.qpos(y.part, y.h)) ^ bit(x.h, y.v)
                ^ bit(y.chi, self.qpos(x.part, x.h)) ^ bit(y.h, x.v))

    def orientation(self, x: SemiVertex, y: SemiVertex) -> int:
        """+1 for an arc x -> y, -1 for y -> x, 0 within a part of Q."""
        px, py = self.qpos(x.part, x.h), self.qpos(y.part, y.h)
        if px == py:
            return 0
        v = self.V(x, y)
        if (px < py) == (v == 0):
            return 1
        return -1

    # ---- the embedded copy of the base ----

    @cached_property
    def psi_rows(self) -> tuple[tuple[int, ...], ...]:
        """psi_rows[x][i] is the chi value of the embedded x on every part
        (i, h); it does not depend on h."""
        base = self.base
        rows = []
        for x in range(self.n):
            p = base.part_of[x]
            row = []
            for i in range(self.k):
                rep = self.reps[i]
                if i == p:
                    row.append(0)
                elif i > p:
                    row.append(1 if base.digraph.has_arc(rep, x) else 0)
                else:
                    row.append(0 if base.orientation(rep, x) == base.orientation(rep, self.reps[p]) else 1)
            rows.append(tuple(row))
        return tuple(rows)

    def psi(self, x: int) -> SemiVertex:
        """Embedded copy of base vertex x (zero part valuation)."""
        block = (1 << (1 << self.n)) - 1
        chi = 0
        for i, val in enumerate(self.psi_rows[x]):
            if val:
                chi |= block << (i << self.n)
        return SemiVertex(self.base.part_of[x], 0, x, chi)

    @cached_property
    def psi_all(self) -> tuple[SemiVertex, ...]:
        return tuple(self.psi(x) for x in range(self.n))

    def vertex_count(self) -> int:
        return self.n * (1 << self.n) * (1 << self.nQ)

    def random_vertex(self, rng) -> SemiVertex:
        part = rng.randrange(self.k)
        h = rng.getrandbits(self.n)
        v = rng.choice(self.base.parts[part])
        chi = rng.getrandbits(self.nQ)
        return SemiVertex(part, h, v, chi)

    def random_vertex_in(self, rng, q: tuple[int, int]) -> SemiVertex:
        part, h = q
        return SemiVertex(part, h, rng.choice(self.base.parts[part]), rng.getrandbits(self.nQ))


def build_witness(structure: PartitionedTournament,
                  q_cap: int = DEFAULT_Q_CAP) -> tuple[WitnessHandle, tuple[SemiVertex, ...]]:
    """Pad the input, build the handle, and return it with the embedding
    (one witness vertex per original base vertex), verified on all pairs."""
    report = validate(structure, "semigeneric")
    if not report.ok:
        raise InputError(f"input is not semigeneric: {report.violations[0].detail}")
    padded, origin = pad_to_equal_parts(structure)
    handle = WitnessHandle(padded, origin, q_cap=q_cap)
    for x, y in itertools.combinations(range(padded.n), 2):
        if handle.orientation(handle.psi(x), handle.psi(y)) != padded.orientation(x, y):
            raise InternalCheckError(f"embedding fails on base pair ({x},{y})")
    return handle, tuple(handle.psi_all[x] for x in range(structure.n))


# ---------------------------------------------------------------------------
# Generator families.  Each generator provides:
#   meta_fwd / meta_bwd : action on (part, h, v)
#   qmap_fwd / qmap_bwd : induced bijection of Q (pairs (part, h))
#   flip(src_meta, dst) : Z2 correction so that the image vertex's chi bit
#                         at Q-position dst equals the source vertex's chi
#                         bit at qmap_bwd(dst) xor flip(src_meta, dst)
# ---------------------------------------------------------------------------


class PartPairFlip:
    """Flips the mutual chi entries between two part ids a < b."""

    def __init__(self, handle: WitnessHandle, a: int, b: int):
        if not (0 <= a < b < handle.k):
            raise InputError("need part ids a < b")
        self.handle = handle
        self.a = a
        self.b = b

    def meta_fwd(self, m: Meta) -> Meta:
        return m

    meta_bwd = meta_fwd

    def qmap_fwd(self, q):
        return q

    qmap_bwd = qmap_fwd

    def flip(self, src: Meta, dst) -> int:
        i = src[0]
        p = dst[0]
        return 1 if (i == self.a and p == self.b) or (i == self.b and p == self.a) else 0

    def inverse(self):
        return self


class ValuationFlip:
    """Moves every part (a, h) to (a, h + 1_v) for a base vertex v outside
    part a, with the matching chi corrections."""

    def __init__(self, handle: WitnessHandle, a: int, v: int):
        if not 0 <= a < handle.k:
            raise InputError("part id out of range")
        if not 0 <= v < handle.n or handle.base.part_of[v] == a:
            raise InputError("flip vertex must lie outside the named part")
        self.handle = handle
        self.a = a
        self.v = v
        self.vmask = 1 << v

    def meta_fwd(self, m: Meta) -> Meta:
        i, h, x = m
        return (i, h ^ self.vmask, x) if i == self.a else m

    meta_bwd = meta_fwd

    def qmap_fwd(self, q):
        p, g = q
        return (p, g ^ self.vmask) if p == self.a else q

    qmap_bwd = qmap_fwd

    def flip(self, src: Meta, dst) -> int:
        p, g = dst
        if p != self.a:
            return 0
        i, h, x = src
        if i != self.a:
            return 1 if x == self.v else 0
        hb = self.handle
        gv = g ^ self.vmask
        hv = h ^ self.vmask
        return 1 if (hb.val_before(h, gv) and hb.val_before(g, hv)) else 0

    def inverse(self):
        return InverseGenerator(self)


class Relabel:
    """Relabels along a part-preserving base bijection: parts (i, h) move to
    (iota(i), h o perm^-1), chi entries on Q-order-inverted pairs flip."""

    def __init__(self, handle: WitnessHandle, perm: tuple[int, ...]):
        base = handle.base
        if sorted(perm) != list(range(base.n)):
            raise InputError("perm is not a bijection of the base set")
        iota = [-1] * handle.k
        for x in range(base.n):
            p, q = base.part_of[x], base.part_of[perm[x]]
            if iota[p] not in (-1, q):
                raise InputError("perm is not part-preserving")
            iota[p] = q
        if sorted(iota) != list(range(handle.k)):
            raise InputError("perm does not induce a part permutation")
        self.handle = handle
        self.perm = tuple(perm)
        inv = [0] * base.n
        for i, p in enumerate(perm):
            inv[p] = i
        self.perm_inv = tuple(inv)
        self.iota = tuple(iota)
        iota_inv = [0] * handle.k
        for i, p in enumerate(iota):
            iota_inv[p] = i
        self.iota_inv = tuple(iota_inv)
        self._fwd_val_cache: dict[int, int] = {}

    def permute_valuation(self, h: int, perm: tuple[int, ...]) -> int:
        out = 0
        while h:
            low = h & -h
            out |= 1 << perm[low.bit_length() - 1]
            h ^= low
        return out

    def val_fwd(self, h: int) -> int:
        out = self._fwd_val_cache.get(h)
        if out is None:
            out = self._fwd_val_cache[h] = self.permute_valuation(h, self.perm)
        return out

    def meta_fwd(self, m: Meta) -> Meta:
        i, h, x = m
        return (self.iota[i], self.val_fwd(h), self.perm[x])

    def meta_bwd(self, m: Meta) -> Meta:
        i, h, x = m
        return (self.iota_inv[i], self.permute_valuation(h, self.perm_inv), self.perm_inv[x])

    def qmap_fwd(self, q):
        return (self.iota[q[0]], self.val_fwd(q[1]))

    def qmap_bwd(self, q):
        return (self.iota_inv[q[0]], self.permute_valuation(q[1], self.perm_inv))

    def flip(self, src: Meta, dst) -> int:
        hb = self.handle
        src_q = (src[0], src[1])
        img_q = (self.iota[src[0]], self.val_fwd(src[1]))
        return 1 if (hb.q_before(src_q, self.qmap_bwd(dst)) and hb.q_before(dst, img_q)) else 0

    def inverse(self):
        return InverseGenerator(self)


class InverseGenerator:
    """Exact inverse of a generator, expressed through its primitives."""

    def __init__(self, fwd):
        self.fwd = fwd
        self.handle = fwd.handle

    def meta_fwd(self, m: Meta) -> Meta:
        return self.fwd.meta_bwd(m)

    def meta_bwd(self, m: Meta) -> Meta:
        return self.fwd.meta_fwd(m)

    def qmap_fwd(self, q):
        return self.fwd.qmap_bwd(q)

    def qmap_bwd(self, q):
        return self.fwd.qmap_fwd(q)

    def flip(self, src: Meta, dst) -> int:
        return self.fwd.flip(self.fwd.meta_bwd(src), self.fwd.qmap_fwd(dst))

    def inverse(self):
        return self.fwd


class SymbolicAutomorphism:
    """Composition of generators; the rightmost generator applies first."""

    def __init__(self, handle: WitnessHandle, generators: tuple):
        self.handle = handle
        self.generators = tuple(generators)
        self._applied = tuple(reversed(self.generators))

    def inverse(self) -> "SymbolicAutomorphism":
        return SymbolicAutomorphism(self.handle, tuple(g.inverse() for g in self._applied))

    def image_meta(self, m: Meta) -> Meta:
        for g in self._applied:
            m = g.meta_fwd(m)
        return m

    def _meta_stages(self, m: Meta) -> list[Meta]:
        stages = [m]
        for g in self._applied:
            m = g.meta_fwd(m)
            stages.append(m)
        return stages

    def chi_bit(self, x: SemiVertex, dst: tuple[int, int],
                stages: list[Meta] | None = None) -> int:
        """Chi bit of the image of x at Q-pair dst, in O(#generators)."""
        if stages is None:
            stages = self._meta_stages((x.part, x.h, x.v))
        flips = 0
        for idx in range(len(self._applied) - 1, -1, -1):
            g = self._applied[idx]
            flips ^= g.flip(stages[idx], dst)
            dst = g.qmap_bwd(dst)
        return bit(x.chi, self.handle.qpos(*dst)) ^ flips

    def apply(self, x: SemiVertex) -> SemiVertex:
        stages = self._meta_stages((x.part, x.h, x.v))
        part, h, v = stages[-1]
        chi = 0
        for pos in range(self.handle.nQ):
            if self.chi_bit(x, self.handle.q_at(pos), stages):
                chi |= 1 << pos
        return SemiVertex(part, h, v, chi)

    def image_V(self, x: SemiVertex, y: SemiVertex) -> int:
        """V of the image pair, without materializing chi masks."""
        sx = self._meta_stages((x.part, x.h, x.v))
        sy = self._meta_stages((y.part, y.h, y.v))
        (px, hx, vx), (py, hy, vy) = sx[-1], sy[-1]
        return (self.chi_bit(x, (py, hy), sx) ^ bit(hx, vy)
                ^ self.chi_bit(y, (px, hx), sy) ^ bit(hy, vx))

    def preserves_pair(self, x: SemiVertex, y: SemiVertex) -> bool:
        """Orientation-preservation criterion on one cross-part pair: V
        changes parity exactly on pairs whose Q-order the map inverts."""
        hb = self.handle
        qx, qy = (x.part, x.h), (y.part, y.h)
        if qx == qy:
            ix, iy = self.image_meta((x.part, x.h, x.v)), self.image_meta((y.part, y.h, y.v))
            return (ix[0], ix[1]) == (iy[0], iy[1])
        ix, iy = self.image_meta((x.part, x.h, x.v)), self.image_meta((y.part, y.h, y.v))
        flipped = hb.q_before(qx, qy) != hb.q_before((ix[0], ix[1]), (iy[0], iy[1]))
        return (hb.V(x, y) ^ self.image_V(x, y)) == (1 if flipped else 0)


def relabel(handle: WitnessHandle, perm: Iterable[int]) -> SymbolicAutomorphism:
    return SymbolicAutomorphism(handle, (Relabel(handle, tuple(perm)),))


def flip_part_pair(handle: WitnessHandle, a: int, b: int) -> SymbolicAutomorphism:
    return SymbolicAutomorphism(handle, (PartPairFlip(handle, a, b),))


def flip_part_valuation(handle: WitnessHandle, a: int, v: int) -> SymbolicAutomorphism:
    return SymbolicAutomorphism(handle, (ValuationFlip(handle, a, v),))


@dataclass(frozen=True)
class ExtensionResult:
    """Extension of a partial automorphism, with its full trace."""

    theta: SymbolicAutomorphism
    base_map: PartialMap
    phi_hat: tuple[int, ...]
    iota: tuple[tuple[int, int], ...]
    iota_hat: tuple[int, ...]
    touched_parts: tuple[int, ...]
    pair_flips: tuple[tuple[int, int], ...]
    valuation_flips: tuple[tuple[int, int], ...]

    def trace_dict(self):
        return {
            "phi_hat": list(self.phi_hat),
            "iota": [list(p) for p in self.iota],
            "iota_hat": list(self.iota_hat),
            "touched_parts": list(self.touched_parts),
            "pair_flips": [list(p) for p in self.pair_flips],
            "valuation_flips": [list(p) for p in self.valuation_flips],
        }


def extend(handle: WitnessHandle, base_map: PartialMap,
           debug_assert: bool = False) -> ExtensionResult:
    """Extend the embedded copy of a partial automorphism of the base.

    `base_map` acts on base vertex ids; its embedded copy psi . base_map
    . psi^-1 is the partial automorphism being extended.  The result is
    the composition of the correcting part-pair flips, the valuation
    flips for untouched parts, and the relabel along the completed base
    bijection (applied first).  Restriction to the embedded domain is
    verified exactly; `debug_assert` additionally recomputes the flip
    data from every domain vertex and checks the projection-consistency
    and zero-sum properties it relies on.
    """
    base = handle.base
    if not is_partial_automorphism(base, base_map):
        raise InputError("base_map is not a partial automorphism of the base")
    phi_hat = complete_part_preserving(base, base_map)
    rel = Relabel(handle, phi_hat)
    iota_hat = rel.iota
    dom = base_map.domain
    touched = sorted({base.part_of[x] for x in dom})
    touched_set = set(touched)
    iota = tuple((a, iota_hat[a]) for a in touched)

    rel_auto = SymbolicAutomorphism(handle, (rel,))

    def flips_of(x: int) -> list[int]:
        """Parts b whose valuation the embedded x flips: the chi of the
        relabelled psi(x) and the chi of psi(base_map(x)) differ at
        (iota_hat(b), h0)."""
        src = handle.psi_all[x]
        target_row = handle.psi_rows[base_map(x)]
        out = []
        for b in range(handle.k):
            got = rel_auto.chi_bit(src, (iota_hat[b], 0))
            if got != target_row[iota_hat[b]]:
                out.append(b)
        return out

    pair_flips_set: set[tuple[int, int]] = set()
    valuation_flips: list[tuple[int, int]] = []
    chosen: dict[int, int] = {}
    for x in dom:
        chosen.setdefault(base.part_of[x], x)
    per_vertex = {x: flips_of(x) for x in dom}
    for a in touched:
        fl = per_vertex[chosen[a]]
        if a in fl:
            raise InternalCheckError("a domain vertex flips its own projection")
        for b in fl:
            if b in touched_set:
                pair_flips_set.add((min(a, b), max(a, b)))
    for x in dom:
        for b in per_vertex[x]:
            if b not in touched_set:
                valuation_flips.append((b, x))
    valuation_flips.sort()

    if debug_assert:
        # every representative of a projection must yield the same flips
        # into touched parts, and flips between touched parts must be
        # symmetric in the two projections
        for x in dom:
            a = base.part_of[x]
            got = {b for b in per_vertex[x] if b in touched_set}
            ref = {b for b in per_vertex[chosen[a]] if b in touched_set}
            if got != ref:
                raise InternalCheckError("flip data depends on the representative vertex")
        for a, b in itertools.combinations(touched, 2):
            ab = (min(a, b), max(a, b)) in pair_flips_set
            ba = a in per_vertex[chosen[b]]
            if ab != ba:
                raise InternalCheckError("flip data is not symmetric between projections")
        # relabelling may not change V on embedded domain pairs
        for x, z in itertools.combinations(dom, 2):
            if base.part_of[x] == base.part_of[z]:
                continue
            vx, vz = handle.psi_all[base_map(x)], handle.psi_all[base_map(z)]
            if handle.V(vx, vz) != rel_auto.image_V(handle.psi_all[x], handle.psi_all[z]):
                raise InternalCheckError("relabel changes V on an embedded domain pair")

    gens: list = []
    for a, b in sorted((min(iota_hat[a], iota_hat[b]), max(iota_hat[a], iota_hat[b]))
                       for a, b in pair_flips_set):
        gens.append(PartPairFlip(handle, a, b))
    g_gens = [ValuationFlip(handle, iota_hat[b], phi_hat[x]) for b, x in valuation_flips]
    theta = SymbolicAutomorphism(handle, (*gens, *g_gens, rel))

    for x in dom:
        img = theta.apply(handle.psi_all[x])
        if img != handle.psi_all[base_map(x)]:
            raise InternalCheckError(f"extension does not restrict to the map at {x}")
    if debug_assert:
        block = (1 << (1 << handle.n)) - 1
        for x in dom:
            img = theta.apply(handle.psi_all[x])
            if img.h != 0:
                raise InternalCheckError("image of an embedded vertex left the zero valuation")
            seg = (img.chi >> (img.part << handle.n)) & block
            if seg not in (0, block):
                raise InternalCheckError("image chi distinguishes copies of its own part")
    return ExtensionResult(theta, base_map, phi_hat, iota, iota_hat,
                           tuple(touched), tuple(sorted(pair_flips_set)),
                           tuple(valuation_flips))


@dataclass(frozen=True)
class MaterializedWitness:
    structure: PartitionedTournament
    vertices: tuple[SemiVertex, ...]

    @cached_property
    def index(self) -> dict[SemiVertex, int]:
        return {v: i for i, v in enumerate(self.vertices)}


def materialize(handle: WitnessHandle, mat_cap: int = DEFAULT_MAT_CAP) -> MaterializedWitness:
    """Explicit structure with one part per element of Q.

    Vertex order: canonical Q position, then base vertex, then chi mask."""
    total = handle.vertex_count()
    if total > mat_cap:
        raise CapacityError(
            f"witness has {total} vertices, above the materialization cap {mat_cap}",
            required=total)
    verts: list[SemiVertex] = []
    part_of: list[int] = []
    for pos in range(handle.nQ):
        part, h = handle.q_at(pos)
        for v in handle.base.parts[part]:
            for chi in range(1 << handle.nQ):
                verts.append(SemiVertex(part, h, v, chi))
                part_of.append(pos)
    arcs = []
    orientation = handle.orientation
    for i in range(len(verts)):
        vi = verts[i]
        for j in range(i + 1, len(verts)):
            o = orientation(vi, verts[j])
            if o == 1:
                arcs.append((i, j))
            elif o == -1:
                arcs.append((j, i))
    structure = PartitionedTournament.build(len(verts), part_of, arcs)
    return MaterializedWitness(structure, tuple(verts))
