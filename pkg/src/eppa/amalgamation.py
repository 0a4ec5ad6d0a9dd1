"""Amalgamation with automorphisms, n-systems, and the finite-n obstruction.

Amalgams are built over a shared copy of A: the two sides are relabelled
so that they intersect exactly in that copy, parts are merged when they
meet through it, and the leftover cross arcs are oriented by fixed rules
(all from the first side to the second for partite tournaments; the
parity-closure and twin-copy rules for semigeneric ones).  Compatible
automorphism pairs of the sides then glue to automorphisms of the whole.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable

from . import graph_eppa, npartite_eppa, semigeneric_eppa, semigeneric_theory
from .errors import InputError, InternalCheckError, PreconditionError
from .structures import (
    Embedding,
    PartialMap,
    PartitionedTournament,
    is_automorphism,
    is_partial_automorphism,
    validate,
)


@dataclass(frozen=True)
class AmalgamInput:
    base: PartitionedTournament
    side1: PartitionedTournament
    side2: PartitionedTournament
    into1: Embedding
    into2: Embedding

    @staticmethod
    def verified(base, side1, side2, images1: Iterable[int], images2: Iterable[int]) -> "AmalgamInput":
        return AmalgamInput(base, side1, side2,
                            Embedding.verified(base, side1, images1),
                            Embedding.verified(base, side2, images2))


@dataclass(frozen=True)
class Amalgam:
    structure: PartitionedTournament
    beta1: tuple[int, ...]            # side1 vertex -> amalgam vertex
    beta2: tuple[int, ...]            # side2 vertex -> amalgam vertex
    shared: tuple[int, ...]           # amalgam ids of the shared copy of the base
    part_table: tuple[tuple[int, int | None, int | None], ...]
    case_counts: dict[str, int]

    def to_dict(self):
        return {
            "vertices": self.structure.n,
            "parts": self.structure.k,
            "part_table": [list(row) for row in self.part_table],
            "case_counts": dict(sorted(self.case_counts.items())),
        }


def _layout(inp: AmalgamInput):
    """Common vertex layout: side1 keeps its ids, side2 minus the shared
    copy is appended in increasing id order."""
    n1 = inp.side1.n
    a2_to_c = {inp.into2(x): inp.into1(x) for x in range(inp.base.n)}
    beta2 = []
    nxt = n1
    for b in range(inp.side2.n):
        if b in a2_to_c:
            beta2.append(a2_to_c[b])
        else:
            beta2.append(nxt)
            nxt += 1
    beta1 = tuple(range(n1))
    total = nxt
    in1 = [None] * total
    in2 = [None] * total
    for b, c in enumerate(beta1):
        in1[c] = b
    for b, c in enumerate(beta2):
        in2[c] = b
    return beta1, tuple(beta2), total, in1, in2


def _merged_parts(inp: AmalgamInput, beta1, beta2, total, in1, in2):
    """Union-find over the parts of the two sides, merged through the base."""
    tokens: dict[tuple, int] = {}

    def token(tag, pid):
        return tokens.setdefault((tag, pid), len(tokens))

    for pid in range(inp.side1.k):
        token(1, pid)
    for pid in range(inp.side2.k):
        token(2, pid)
    parent = list(range(len(tokens)))

    def find(t):
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    for x in range(inp.base.n):
        t1 = find(token(1, inp.side1.part_of[inp.into1(x)]))
        t2 = find(token(2, inp.side2.part_of[inp.into2(x)]))
        if t1 != t2:
            parent[t2] = t1
    group_of_vertex = []
    for c in range(total):
        if in1[c] is not None:
            group_of_vertex.append(find(token(1, inp.side1.part_of[in1[c]])))
        else:
            group_of_vertex.append(find(token(2, inp.side2.part_of[in2[c]])))
    first_seen: dict[int, int] = {}
    part_of = []
    for c, g in enumerate(group_of_vertex):
        if g not in first_seen:
            first_seen[g] = len(first_seen)
        part_of.append(first_seen[g])
    table = []
    for g, pid in first_seen.items():
        p1 = next((p for p in range(inp.side1.k) if find(token(1, p)) == g), None)
        p2 = next((p for p in range(inp.side2.k) if find(token(2, p)) == g), None)
        table.append((pid, p1, p2))
    return tuple(part_of), tuple(table)


def amalgamate_partite(inp: AmalgamInput) -> Amalgam:
    """Free amalgam of partite tournaments over the base: parts merged
    through the base, all leftover cross arcs oriented side1 -> side2."""
    for tag, s in (("side1", inp.side1), ("side2", inp.side2)):
        report = validate(s, "npartite")
        if not report.ok:
            raise InputError(f"{tag} is not a partite tournament: {report.violations[0].detail}")
    beta1, beta2, total, in1, in2 = _layout(inp)
    part_of, table = _merged_parts(inp, beta1, beta2, total, in1, in2)
    arcs = []
    counts = {"copied": 0, "cross": 0}
    for c, d in itertools.combinations(range(total), 2):
        if part_of[c] == part_of[d]:
            continue
        if in1[c] is not None and in1[d] is not None:
            o = inp.side1.orientation(in1[c], in1[d])
            counts["copied"] += 1
        elif in2[c] is not None and in2[d] is not None:
            o = inp.side2.orientation(in2[c], in2[d])
            counts["copied"] += 1
        else:
            o = 1 if in1[c] is not None else -1
            counts["cross"] += 1
        if o == 1:
            arcs.append((c, d))
        elif o == -1:
            arcs.append((d, c))
    structure = PartitionedTournament.build(total, part_of, arcs)
    result = Amalgam(structure, beta1, beta2,
                     tuple(beta1[inp.into1(x)] for x in range(inp.base.n)),
                     table, counts)
    _check_amalgam(inp, result, "npartite")
    return result


def amalgamate_semigeneric(inp: AmalgamInput) -> Amalgam:
    """Semigeneric amalgam over a saturated twinless base.

    Arcs between leftover cross pairs are fixed case by case: parts away
    from the base get the side1 -> side2 orientation; pairs of parts both
    meeting the base are closed up to even parity against base anchors;
    pairs with exactly one part meeting the base copy the arcs of the
    unique base twin of the off-base endpoint.
    """
    if not (semigeneric_theory.is_saturated(inp.base)
            and semigeneric_theory.is_twinless(inp.base)):
        raise PreconditionError("base must be saturated and twinless")
    for tag, s in (("side1", inp.side1), ("side2", inp.side2)):
        report = validate(s, "semigeneric")
        if not report.ok:
            raise InputError(f"{tag} is not semigeneric: {report.violations[0].detail}")
    beta1, beta2, total, in1, in2 = _layout(inp)
    part_of, table = _merged_parts(inp, beta1, beta2, total, in1, in2)
    shared = tuple(beta1[inp.into1(x)] for x in range(inp.base.n))
    shared_set = set(shared)

    part_meets_base = [False] * (max(part_of) + 1 if part_of else 0)
    for c in shared:
        part_meets_base[part_of[c]] = True
    anchor = {}
    for c in sorted(shared):
        anchor.setdefault(part_of[c], c)

    twin1 = _base_twin_map(inp.side1, inp.into1, beta1)
    twin2 = _base_twin_map(inp.side2, inp.into2, beta2)

    def orient(c, d):
        if in1[c] is not None and in1[d] is not None:
            return inp.side1.orientation(in1[c], in1[d]), "copied"
        if in2[c] is not None and in2[d] is not None:
            return inp.side2.orientation(in2[c], in2[d]), "copied"
        if in1[c] is None:
            o, case = orient(d, c)
            return -o, case
        # c strictly on side1, d strictly on side2
        pc, pd = part_of[c], part_of[d]
        mc, md = part_meets_base[pc], part_meets_base[pd]
        if not mc and not md:
            return 1, "cross-free"
        if mc and md:
            u0, w0 = anchor[pc], anchor[pd]
            known = ((inp.side1.digraph.has_arc(in1[c], in1[w0]))
                     + (inp.side2.digraph.has_arc(in2[u0], in2[d]))
                     + (inp.side1.digraph.has_arc(in1[u0], in1[w0])))
            return (1 if known % 2 else -1), "parity-closed"
        if mc:
            a = twin1[c]
            return inp.side2.orientation(in2[a], in2[d]), "twin-copied"
        a = twin2[d]
        return inp.side1.orientation(in1[c], in1[a]), "twin-copied"

    arcs = []
    counts = {"copied": 0, "cross-free": 0, "parity-closed": 0, "twin-copied": 0}
    for c, d in itertools.combinations(range(total), 2):
        if part_of[c] == part_of[d]:
            continue
        o, case = orient(c, d)
        counts[case] += 1
        if o == 1:
            arcs.append((c, d))
        elif o == -1:
            arcs.append((d, c))
    structure = PartitionedTournament.build(total, part_of, arcs)
    result = Amalgam(structure, beta1, beta2, shared, table, counts)
    _check_amalgam(inp, result, "semigeneric")
    return result


def _base_twin_map(side: PartitionedTournament, into: Embedding, beta) -> dict[int, int]:
    """For every side vertex in a part meeting the base image, the amalgam
    id of the unique base-image vertex it is twinned with inside the
    substructure induced on those parts."""
    img = [into(x) for x in range(into.domain_size)]
    img_set = set(img)
    parts_hit = sorted({side.part_of[b] for b in img})
    members = [v for p in parts_hit for v in side.parts[p]]
    sub, old = side.induced(members)
    back = {o: i for i, o in enumerate(old)}
    eq = semigeneric_theory.twin_partition(sub)
    out: dict[int, int] = {}
    for cls in eq.classes:
        base_members = [old[v] for v in cls if old[v] in img_set]
        if len(base_members) != 1:
            raise InternalCheckError(
                "a twin class of the base-adjacent substructure does not contain "
                "exactly one base vertex (base not saturated twinless enough)")
        rep = beta[base_members[0]]
        for v in cls:
            out[beta[old[v]]] = rep
    return out


def _check_amalgam(inp: AmalgamInput, result: Amalgam, class_tag: str):
    s = result.structure
    report = validate(s, class_tag)
    if not report.ok:
        raise InternalCheckError(f"amalgam fails {class_tag} validation: {report.violations[0].detail}")
    for x in range(inp.base.n):
        if result.beta1[inp.into1(x)] != result.beta2[inp.into2(x)]:
            raise InternalCheckError("the two side embeddings disagree on the base")
    for side, beta in ((inp.side1, result.beta1), (inp.side2, result.beta2)):
        for u, v in itertools.combinations(range(side.n), 2):
            if side.pair_code(u, v) != s.pair_code(beta[u], beta[v]):
                raise InternalCheckError("a side is not an induced substructure of the amalgam")


def glue_automorphisms(inp: AmalgamInput, result: Amalgam,
                       f1, f2) -> tuple[int, ...]:
    """Glue compatible side automorphisms to an automorphism of the amalgam.

    Both maps must be automorphisms of their sides, preserve the base
    image setwise, and agree on it through the embeddings.
    """
    f1, f2 = tuple(f1), tuple(f2)
    if not is_automorphism(inp.side1, f1):
        raise InputError("f1 is not an automorphism of side1")
    if not is_automorphism(inp.side2, f2):
        raise InputError("f2 is not an automorphism of side2")
    a1 = {inp.into1(x) for x in range(inp.base.n)}
    a2 = {inp.into2(x) for x in range(inp.base.n)}
    if {f1[b] for b in a1} != a1 or {f2[b] for b in a2} != a2:
        raise PreconditionError("maps must preserve the base image setwise")
    for x in range(inp.base.n):
        if result.beta1[f1[inp.into1(x)]] != result.beta2[f2[inp.into2(x)]]:
            raise PreconditionError("maps disagree on the base")
    total = result.structure.n
    in1 = {c: b for b, c in enumerate(result.beta1)}
    in2 = {c: b for b, c in enumerate(result.beta2)}
    glued = []
    for c in range(total):
        if c in in1:
            glued.append(result.beta1[f1[in1[c]]])
        else:
            glued.append(result.beta2[f2[in2[c]]])
    glued = tuple(glued)
    if not is_automorphism(result.structure, glued):
        raise InternalCheckError("glued map is not an automorphism of the amalgam")
    return glued


# ---------------------------------------------------------------------------
# n-systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NSystem:
    """A structure with a tuple of partial automorphisms."""

    structure: object
    maps: tuple[PartialMap, ...]

    def __post_init__(self):
        for p in self.maps:
            if not is_partial_automorphism(self.structure, p):
                raise InputError("every map of an n-system must be a partial automorphism")


def is_system_embedding(images, source: NSystem, target: NSystem) -> bool:
    """f . p_i within q_i . f for every i, on top of a structure embedding."""
    try:
        Embedding.verified(source.structure, target.structure, images)
    except InputError:
        return False
    for p, q in zip(source.maps, target.maps):
        qd = q.as_dict
        for u, v in p.pairs:
            if images[u] not in qd or qd[images[u]] != images[v]:
                return False
    return True


def witness_system(system: NSystem, class_tag: str,
                   q_cap: int = semigeneric_eppa.DEFAULT_Q_CAP,
                   mat_cap: int = semigeneric_eppa.DEFAULT_MAT_CAP) -> tuple[NSystem, Embedding]:
    """Extend an n-system into a witness where all maps become total.

    For graphs and partite tournaments this is the explicit witness; for
    the semigeneric class the extensions are pushed through the quotient
    of the materialized witness, which is saturated and twinless.  The
    structure embedding is verified to be an embedding of n-systems.
    """
    if class_tag == "graph":
        w, psi = graph_eppa.build_witness(system.structure)
        target = w.as_graph()
        hats = []
        for p in system.maps:
            phi = PartialMap.from_pairs((psi(u), psi(v)) for u, v in p.pairs)
            theta = graph_eppa.extend(w, psi, phi)
            hats.append(PartialMap.from_pairs(enumerate(theta.as_index_permutation())))
        hat = NSystem(target, tuple(hats))
        emb = psi
    elif class_tag == "npartite":
        w, psi = npartite_eppa.build_witness(system.structure)
        target = w.as_tournament()
        hats = []
        for p in system.maps:
            phi = PartialMap.from_pairs((psi(u), psi(v)) for u, v in p.pairs)
            theta = npartite_eppa.extend(w, phi)
            hats.append(PartialMap.from_pairs(enumerate(theta.as_index_permutation())))
        hat = NSystem(target, tuple(hats))
        emb = psi
    elif class_tag == "semigeneric":
        handle, psi = semigeneric_eppa.build_witness(system.structure, q_cap=q_cap)
        mat = semigeneric_eppa.materialize(handle, mat_cap=mat_cap)
        quot = semigeneric_theory.quotient(mat.structure)
        hats = []
        for p in system.maps:
            res = semigeneric_eppa.extend(handle, p)
            perm = tuple(mat.index[res.theta.apply(v)] for v in mat.vertices)
            descended = semigeneric_theory.induced_quotient_automorphism(
                mat.structure, perm, quot)
            hats.append(PartialMap.from_pairs(enumerate(descended)))
        emb_images = tuple(quot.projection[mat.index[psi[x]]] for x in range(system.structure.n))
        hat = NSystem(quot.structure, tuple(hats))
        emb = Embedding.verified(system.structure, quot.structure, emb_images)
    else:
        raise InputError(f"unknown class tag {class_tag!r}")
    if not is_system_embedding(emb.images, system, hat):
        raise InternalCheckError("witness system does not embed the input system")
    return hat, emb


# ---------------------------------------------------------------------------
# the finite-n obstruction
# ---------------------------------------------------------------------------


def non_jep_counterexample(n: int) -> tuple[PartitionedTournament, tuple[int, ...]]:
    """The n-partite structure whose rotated copy blocks joint embedding.

    An oriented 4-cycle occupying two parts, plus n-2 singleton parts fed
    from the cycle (singletons ordered by id among themselves); the
    returned automorphism rotates the cycle by one vertex, swapping the
    two cycle parts and fixing everything else.
    """
    if n < 2:
        raise InputError("need n >= 2")
    total = 4 + (n - 2)
    part_of = [0, 1, 0, 1] + [2 + i for i in range(n - 2)]
    arcs = [(0, 1), (1, 2), (2, 3), (3, 0)]
    for v in range(4, total):
        for u in range(4):
            arcs.append((u, v))
        for w in range(v + 1, total):
            arcs.append((v, w))
    structure = PartitionedTournament.build(total, part_of, arcs)
    f = tuple([1, 2, 3, 0] + list(range(4, total)))
    if not is_automorphism(structure, f):
        raise InternalCheckError("rotation is not an automorphism of the counterexample")
    return structure, f


def fixes_all_parts(structure: PartitionedTournament, p: PartialMap) -> bool:
    return all(structure.same_part(u, v) for u, v in p.pairs)


def embeds_system(source: NSystem, target: NSystem) -> tuple[int, ...] | None:
    """Backtracking search for an embedding of 1..n-systems."""
    s, t = source.structure, target.structure
    n, m = s.n, t.n
    images: list[int] = []
    used = [False] * m
    tmaps = [q.as_dict for q in target.maps]
    smaps = [p.as_dict for p in source.maps]

    def consistent(v: int, c: int) -> bool:
        for w in range(len(images)):
            if s.pair_code(v, w) != t.pair_code(c, images[w]):
                return False
        placed = len(images)
        for pm, qm in zip(smaps, tmaps):
            if v in pm:
                if c not in qm:
                    return False
                pv = pm[v]
                if pv < placed and qm[c] != images[pv]:
                    return False
                if pv == v and qm[c] != c:
                    return False
            for u, pv in pm.items():
                if pv == v and u < placed and qm.get(images[u]) != c:
                    return False
        return True

    def system_ok() -> bool:
        for pm, qm in zip(smaps, tmaps):
            for u, v in pm.items():
                iu = images[u]
                if iu not in qm or qm[iu] != images[v]:
                    return False
        return True

    def rec(v: int):
        if v == n:
            return tuple(images) if system_ok() else None
        for c in range(m):
            if used[c]:
                continue
            if consistent(v, c):
                images.append(c)
                used[c] = True
                found = rec(v + 1)
                if found is not None:
                    return found
                used[c] = False
                images.pop()
        return None

    return rec(0)


# ---------------------------------------------------------------------------
# seeded random structure generators (for the randomized suites)
# ---------------------------------------------------------------------------


def random_partite(rng: random.Random, max_vertices: int = 8, max_parts: int = 4,
                   min_vertices: int = 0) -> PartitionedTournament:
    n = rng.randint(min_vertices, max_vertices)
    if n == 0:
        return PartitionedTournament.build(0, [], [])
    k = rng.randint(1, min(max_parts, n))
    part_of = list(range(k)) + [rng.randrange(k) for _ in range(n - k)]
    rng.shuffle(part_of)
    part_of = _contiguous(part_of)
    arcs = []
    for u, v in itertools.combinations(range(n), 2):
        if part_of[u] != part_of[v]:
            arcs.append((u, v) if rng.random() < 0.5 else (v, u))
    return PartitionedTournament.build(n, part_of, arcs)


def _contiguous(part_of: list[int]) -> list[int]:
    seen: dict[int, int] = {}
    out = []
    for p in part_of:
        if p not in seen:
            seen[p] = len(seen)
        out.append(seen[p])
    return out


def random_semigeneric(rng: random.Random, sizes: tuple[int, ...]) -> PartitionedTournament:
    """Random semigeneric tournament: for every part pair the directions
    are a two-coloring pattern, which is exactly the evenness condition."""
    part_of = [p for p, s in enumerate(sizes) for _ in range(s)]
    n = len(part_of)
    structure_parts = [[] for _ in sizes]
    for v, p in enumerate(part_of):
        structure_parts[p].append(v)
    arcs = []
    for i in range(len(sizes)):
        for j in range(i + 1, len(sizes)):
            ci = {v: rng.getrandbits(1) for v in structure_parts[i]}
            cj = {v: rng.getrandbits(1) for v in structure_parts[j]}
            d = rng.getrandbits(1)
            for u in structure_parts[i]:
                for w in structure_parts[j]:
                    if (ci[u] + cj[w] + d) % 2 == 0:
                        arcs.append((u, w))
                    else:
                        arcs.append((w, u))
    return PartitionedTournament.build(n, part_of, arcs)


def random_saturated_twinless(rng: random.Random, k: int, part_size: int,
                              max_tries: int = 200) -> tuple[PartitionedTournament, int]:
    """Rejection-sample a saturated twinless semigeneric tournament:
    random semigeneric structures are quotiented (guaranteeing twinless)
    and kept when saturated.  Returns the structure and rejection count."""
    rejections = 0
    for _ in range(max_tries):
        s = random_semigeneric(rng, tuple([part_size] * k))
        q = semigeneric_theory.quotient(s).structure
        if semigeneric_theory.is_saturated(q):
            return q, rejections
        rejections += 1
    raise InternalCheckError(f"no saturated sample found in {max_tries} tries")


def random_semigeneric_extension(rng: random.Random, base: PartitionedTournament,
                                 grow_existing: int = 1, new_parts: int = 0,
                                 twin: bool = False) -> tuple[PartitionedTournament, tuple[int, ...]]:
    """Extend a semigeneric structure by fresh vertices.

    A vertex added to an existing part copies a present member's arc
    directions towards every other part, each optionally inverted per
    part (class change); `twin` forces an exact copy.  Vertices added as
    new singleton parts get arbitrary directions (singleton parts are
    unconstrained by the evenness condition).  Returns the extension and
    the embedding images of the base.
    """
    part_of = list(base.part_of)
    n = base.n
    orient: dict[tuple[int, int], int] = {}
    for u, v in itertools.combinations(range(n), 2):
        orient[(u, v)] = base.orientation(u, v)

    def get(u, v):
        if u < v:
            return orient[(u, v)]
        return -orient[(v, u)]

    def add_vertex(pid):
        nonlocal n
        w = n
        n += 1
        if pid is None:
            pid = max(part_of) + 1 if part_of else 0
            part_of.append(pid)
            for u in range(w):
                orient[(u, w)] = 1 if rng.getrandbits(1) else -1
        else:
            model = next(v for v in range(w) if part_of[v] == pid)
            flip = {}
            for q in set(part_of):
                if q != pid:
                    flip[q] = 0 if twin else rng.getrandbits(1)
            part_of.append(pid)
            for u in range(w):
                if part_of[u] == pid:
                    orient[(u, w)] = 0
                else:
                    o = get(model, u)
                    orient[(u, w)] = -o if flip[part_of[u]] else o
        return w

    for _ in range(grow_existing):
        if base.k:
            add_vertex(rng.randrange(base.k))
    for _ in range(new_parts):
        add_vertex(None)
    arcs = []
    for (u, v), o in orient.items():
        if o == 1:
            arcs.append((u, v))
        elif o == -1:
            arcs.append((v, u))
    out = PartitionedTournament.build(n, _contiguous(part_of), arcs)
    return out, tuple(range(base.n))
