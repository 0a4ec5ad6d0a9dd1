"""Twin equivalences, saturation, and the quotient of semigeneric tournaments.

Between any two parts X, Y of a semigeneric tournament, agreement of arc
directions towards a single fixed y0 in Y already decides agreement
towards every y in Y, so each part splits into at most two direction
classes per reference part.  Intersecting the splittings over all other
parts and taking the union over parts yields the twin equivalence; its
quotient is the canonical twinless companion structure.

All vertex sets here are manipulated as bitmasks so that the routines
stay usable on materialized witnesses with a couple of thousand vertices.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .errors import InputError, InternalCheckError
from .structures import PartitionedTournament, is_automorphism, validate


def _mask_vertices(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


def require_partite(structure: PartitionedTournament):
    report = validate(structure, "npartite")
    if not report.ok:
        raise InputError(f"structure is not a partite tournament: {report.violations[0].detail}")


@dataclass(frozen=True)
class EquivalenceOnPart:
    part: int
    reference_part: int
    classes: tuple[tuple[int, ...], ...]

    def class_of(self, v: int) -> int:
        for i, cls in enumerate(self.classes):
            if v in cls:
                return i
        raise InputError(f"vertex {v} not in part {self.part}")


def direction_split_mask(structure: PartitionedTournament, x_part: int, y_part: int) -> int:
    """Bitmask of the vertices of X whose arc points towards the least
    vertex of Y.  Checks that the same split is induced by every other
    vertex of Y (the evenness condition in action); raises otherwise."""
    if x_part == y_part:
        raise InputError("parts must differ")
    x_mask = structure.part_masks[x_part]
    ys = structure.parts[y_part]
    in_rows = structure.digraph.in_rows
    towards0 = in_rows[ys[0]] & x_mask
    for y in ys[1:]:
        t = in_rows[y] & x_mask
        if t != towards0 and t != (x_mask ^ towards0):
            raise InputError(
                f"parts {x_part},{y_part}: direction agreement at {ys[0]} does not "
                f"propagate to {y}; structure is not semigeneric")
    return towards0


def direction_classes(structure: PartitionedTournament, x_part: int, y_part: int) -> EquivalenceOnPart:
    towards = direction_split_mask(structure, x_part, y_part)
    x_mask = structure.part_masks[x_part]
    classes = tuple(_mask_vertices(m) for m in (towards, x_mask ^ towards) if m)
    return EquivalenceOnPart(x_part, y_part, classes)


@dataclass(frozen=True)
class GlobalEquivalence:
    """The twin partition: same part and same direction class towards
    every other part."""

    classes: tuple[tuple[int, ...], ...]

    @property
    def class_count(self) -> int:
        return len(self.classes)

    def class_index(self) -> dict[int, int]:
        out = {}
        for i, cls in enumerate(self.classes):
            for v in cls:
                out[v] = i
        return out


def twin_partition(structure: PartitionedTournament) -> GlobalEquivalence:
    require_partite(structure)
    k = structure.k
    splits = {(p, q): direction_split_mask(structure, p, q)
              for p in range(k) for q in range(k) if p != q}
    profiles: dict[tuple, list[int]] = {}
    for p in range(k):
        others = [q for q in range(k) if q != p]
        for v in structure.parts[p]:
            key = (p, tuple((splits[(p, q)] >> v) & 1 for q in others))
            profiles.setdefault(key, []).append(v)
    classes = sorted(tuple(sorted(c)) for c in profiles.values())
    return GlobalEquivalence(tuple(classes))


def is_twinless(structure: PartitionedTournament) -> bool:
    return all(len(c) == 1 for c in twin_partition(structure).classes)


def saturation_class_count(k: int) -> int:
    """Maximum possible number of twin classes: k * 2^(k-1)."""
    return k * (1 << (k - 1)) if k else 0


def is_saturated(structure: PartitionedTournament, profile_samples: int = 0,
                 seed: int = 0) -> bool:
    """Decide saturation by two independent characterizations.

    (b) every pairwise split has two nonempty classes and every choice of
        one class per reference part has nonempty intersection;
    (c) every profile of arc directions towards one chosen vertex per
        other part is realized within the part.

    (c) is swept exhaustively while the number of reference-vertex
    sequences is small, otherwise over `profile_samples` seeded random
    sequences per part.  The two verdicts must agree.
    """
    require_partite(structure)
    by_b = _saturated_by_intersections(structure)
    by_c = _saturated_by_profiles(structure, profile_samples, seed)
    if by_b != by_c:
        raise InternalCheckError(
            f"saturation characterizations disagree: intersections={by_b} profiles={by_c}")
    count_ok = twin_partition(structure).class_count == saturation_class_count(structure.k)
    if count_ok != by_b:
        raise InternalCheckError("class count disagrees with the characterizations")
    return by_b


def _saturated_by_intersections(structure: PartitionedTournament) -> bool:
    k = structure.k
    for p in range(k):
        x_mask = structure.part_masks[p]
        masks = []
        for q in range(k):
            if q == p:
                continue
            t = direction_split_mask(structure, p, q)
            if t == 0 or t == x_mask:
                return False
            masks.append(t)
        for choice in itertools.product((0, 1), repeat=len(masks)):
            common = x_mask
            for m, c in zip(masks, choice):
                common &= m if c == 0 else (x_mask ^ m)
            if not common:
                return False
    return True


def _saturated_by_profiles(structure: PartitionedTournament, profile_samples: int,
                           seed: int) -> bool:
    k = structure.k
    if k == 0:
        return True
    out_rows = structure.digraph.out_rows
    parts = structure.parts

    def realizes_all(p: int, refs: tuple[int, ...]) -> bool:
        seen = set()
        for v in parts[p]:
            row = out_rows[v]
            seen.add(tuple((row >> r) & 1 for r in refs))
        return len(seen) == 1 << len(refs)

    for p in range(k):
        others = [q for q in range(k) if q != p]
        total = 1
        for q in others:
            total *= len(parts[q])
        if profile_samples and total > profile_samples:
            rng = random.Random((seed, p))
            for _ in range(profile_samples):
                refs = tuple(rng.choice(parts[q]) for q in others)
                if not realizes_all(p, refs):
                    return False
        else:
            for refs in itertools.product(*(parts[q] for q in others)):
                if not realizes_all(p, refs):
                    return False
    return True


@dataclass(frozen=True)
class QuotientResult:
    structure: PartitionedTournament
    projection: tuple[int, ...]
    classes: tuple[tuple[int, ...], ...]

    def to_dict(self):
        return {
            "vertices": self.structure.n,
            "classes": [list(c) for c in self.classes],
        }


def quotient(structure: PartitionedTournament) -> QuotientResult:
    """Collapse every twin class to its least member.

    Quotient vertex ids follow representative order; arcs are inherited
    from representatives (well-defined by the twin property), parts are
    the images of parts.  The result is always twinless.
    """
    eq = twin_partition(structure)
    classes = tuple(sorted(eq.classes, key=lambda c: c[0]))
    reps = [c[0] for c in classes]
    idx = {}
    for i, cls in enumerate(classes):
        for v in cls:
            idx[v] = i
    part_ids = sorted({structure.part_of[r] for r in reps})
    renum = {p: i for i, p in enumerate(part_ids)}
    arcs = []
    for i, j in itertools.combinations(range(len(reps)), 2):
        o = structure.orientation(reps[i], reps[j])
        if o == 1:
            arcs.append((i, j))
        elif o == -1:
            arcs.append((j, i))
    q = PartitionedTournament.build(
        len(reps), (renum[structure.part_of[r]] for r in reps), arcs)
    projection = tuple(idx[v] for v in range(structure.n))
    return QuotientResult(q, projection, classes)


def induced_quotient_automorphism(structure: PartitionedTournament,
                                  automorphism,
                                  quot: QuotientResult | None = None) -> tuple[int, ...]:
    """Descend a verified automorphism to the quotient, class by class."""
    f = tuple(automorphism)
    if not is_automorphism(structure, f):
        raise InputError("map is not an automorphism of the structure")
    if quot is None:
        quot = quotient(structure)
    proj = quot.projection
    out = [-1] * quot.structure.n
    for cls in quot.classes:
        images = {proj[f[v]] for v in cls}
        if len(images) != 1:
            raise InternalCheckError("automorphism does not preserve the twin partition")
        out[proj[cls[0]]] = images.pop()
    got = tuple(out)
    if not is_automorphism(quot.structure, got):
        raise InternalCheckError("descended map is not an automorphism of the quotient")
    return got
