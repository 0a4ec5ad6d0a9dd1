"""Core data model: digraphs, partite tournaments, partial maps, file I/O.

Vertices are contiguous integers 0..n-1; the numeric order doubles as the
linear order used by the witness constructions.  Part ids are contiguous
integers 0..k-1 but parts need not occupy contiguous id blocks.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

from .errors import CapacityError, InputError, PreconditionError, StructureError

SEMIGENERIC_CHECK_BUDGET = 10**8


@dataclass(frozen=True)
class Digraph:
    """Irreflexive antisymmetric directed graph on vertices 0..n-1.

    Arcs are stored as out-neighbour bitmask rows: bit w of out_rows[v] is
    set iff there is an arc v -> w.
    """

    n: int
    out_rows: tuple[int, ...]

    def __post_init__(self):
        if self.n < 0 or len(self.out_rows) != self.n:
            raise StructureError("out_rows length must equal vertex count")
        full = (1 << self.n) - 1
        for v, row in enumerate(self.out_rows):
            if row & ~full:
                raise StructureError(f"arc endpoint out of range in row {v}")
            if (row >> v) & 1:
                raise StructureError(f"loop at vertex {v}")
        for v in range(self.n):
            for w in range(v + 1, self.n):
                if (self.out_rows[v] >> w) & 1 and (self.out_rows[w] >> v) & 1:
                    raise StructureError(f"bidirectional arc between {v} and {w}")

    @staticmethod
    def from_arcs(n: int, arcs: Iterable[tuple[int, int]]) -> "Digraph":
        rows = [0] * n
        seen = set()
        for u, v in arcs:
            if not (0 <= u < n and 0 <= v < n):
                raise StructureError(f"arc ({u},{v}) out of range")
            if u == v:
                raise StructureError(f"loop at vertex {u}")
            if (u, v) in seen:
                raise StructureError(f"duplicate arc ({u},{v})")
            seen.add((u, v))
            rows[u] |= 1 << v
        return Digraph(n, tuple(rows))

    def has_arc(self, u: int, v: int) -> bool:
        return bool((self.out_rows[u] >> v) & 1)

    def orientation(self, u: int, v: int) -> int:
        """+1 for u->v, -1 for v->u, 0 for no arc."""
        if (self.out_rows[u] >> v) & 1:
            return 1
        if (self.out_rows[v] >> u) & 1:
            return -1
        return 0

    def arcs(self) -> Iterator[tuple[int, int]]:
        for u in range(self.n):
            row = self.out_rows[u]
            while row:
                low = row & -row
                yield (u, low.bit_length() - 1)
                row ^= low

    @cached_property
    def in_rows(self) -> tuple[int, ...]:
        rows = [0] * self.n
        for u, out in enumerate(self.out_rows):
            row = out
            while row:
                low = row & -row
                rows[low.bit_length() - 1] |= 1 << u
                row ^= low
        return tuple(rows)

    @property
    def arc_count(self) -> int:
        return sum(row.bit_count() for row in self.out_rows)


@dataclass(frozen=True)
class PartitionedTournament:
    """A digraph together with a total part assignment.

    Nothing beyond well-formedness is enforced here; class membership
    (n-partite, semigeneric) is checked by `validate`.
    """

    digraph: Digraph
    part_of: tuple[int, ...]

    def __post_init__(self):
        if len(self.part_of) != self.digraph.n:
            raise StructureError("part_of length must equal vertex count")
        used = set(self.part_of)
        if used and used != set(range(max(used) + 1)):
            raise StructureError("part ids must be contiguous starting at 0")

    @staticmethod
    def build(n: int, parts: Iterable[int], arcs: Iterable[tuple[int, int]]) -> "PartitionedTournament":
        return PartitionedTournament(Digraph.from_arcs(n, arcs), tuple(parts))

    @property
    def n(self) -> int:
        return self.digraph.n

    @property
    def k(self) -> int:
        return max(self.part_of) + 1 if self.part_of else 0

    @cached_property
    def parts(self) -> tuple[tuple[int, ...], ...]:
        members: list[list[int]] = [[] for _ in range(self.k)]
        for v, p in enumerate(self.part_of):
            members[p].append(v)
        return tuple(tuple(m) for m in members)

    @cached_property
    def part_masks(self) -> tuple[int, ...]:
        masks = [0] * self.k
        for v, p in enumerate(self.part_of):
            masks[p] |= 1 << v
        return tuple(masks)

    def same_part(self, u: int, v: int) -> bool:
        return self.part_of[u] == self.part_of[v]

    def orientation(self, u: int, v: int) -> int:
        return self.digraph.orientation(u, v)

    def pair_code(self, u: int, v: int) -> int:
        """Hashable code of the ordered-pair relationship; automorphisms
        are exactly the bijections preserving this code on every pair."""
        return (2 if self.same_part(u, v) else 0) * 4 + self.digraph.orientation(u, v) + 1

    def induced(self, vertices: Iterable[int]) -> tuple["PartitionedTournament", tuple[int, ...]]:
        """Substructure on the given vertices (sorted); returns it together
        with the list mapping new ids to old ids.  Parts are renumbered
        contiguously in order of first appearance by old part id."""
        old = tuple(sorted(set(vertices)))
        part_order = sorted({self.part_of[v] for v in old})
        renum = {p: i for i, p in enumerate(part_order)}
        arcs = [
            (i, j)
            for i, u in enumerate(old)
            for j, w in enumerate(old)
            if self.digraph.has_arc(u, w)
        ]
        sub = PartitionedTournament.build(len(old), (renum[self.part_of[v]] for v in old), arcs)
        return sub, old


@dataclass(frozen=True)
class PartialMap:
    """Injective partial map on vertex ids, stored as sorted (src, dst) pairs."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        srcs = [u for u, _ in self.pairs]
        dsts = [v for _, v in self.pairs]
        if len(set(srcs)) != len(srcs):
            raise StructureError("partial map is not functional")
        if len(set(dsts)) != len(dsts):
            raise StructureError("partial map is not injective")
        if list(self.pairs) != sorted(self.pairs):
            raise StructureError("pairs must be sorted by source")

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[int, int]]) -> "PartialMap":
        return PartialMap(tuple(sorted(set(pairs))))

    @staticmethod
    def empty() -> "PartialMap":
        return PartialMap(())

    @staticmethod
    def identity_on(vertices: Iterable[int]) -> "PartialMap":
        return PartialMap.from_pairs((v, v) for v in vertices)

    @cached_property
    def as_dict(self) -> dict[int, int]:
        return dict(self.pairs)

    @property
    def domain(self) -> tuple[int, ...]:
        return tuple(u for u, _ in self.pairs)

    @property
    def range(self) -> tuple[int, ...]:
        return tuple(sorted(v for _, v in self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def __call__(self, u: int) -> int:
        return self.as_dict[u]

    def inverse(self) -> "PartialMap":
        return PartialMap.from_pairs((v, u) for u, v in self.pairs)


@dataclass(frozen=True)
class Embedding:
    """Total injective structure-preserving map, stored as the image tuple."""

    images: tuple[int, ...]

    def __call__(self, u: int) -> int:
        return self.images[u]

    @property
    def domain_size(self) -> int:
        return len(self.images)

    @staticmethod
    def verified(source, target, images: Iterable[int]) -> "Embedding":
        """Check injectivity and pair-code preservation on every pair."""
        imgs = tuple(images)
        if len(imgs) != source.n:
            raise InputError("embedding must be total on the source")
        if len(set(imgs)) != len(imgs):
            raise InputError("embedding must be injective")
        for v in imgs:
            if not 0 <= v < target.n:
                raise InputError(f"embedding image {v} out of range")
        for u, w in itertools.combinations(range(source.n), 2):
            if source.pair_code(u, w) != target.pair_code(imgs[u], imgs[w]):
                raise InputError(f"map does not preserve the pair ({u},{w})")
        return Embedding(imgs)


@dataclass(frozen=True)
class Violation:
    kind: str
    vertices: tuple[int, ...]
    detail: str

    def to_dict(self):
        return {"kind": self.kind, "vertices": list(self.vertices), "detail": self.detail}


@dataclass(frozen=True)
class ValidationReport:
    class_tag: str
    violations: tuple[Violation, ...]
    checks: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {
            "class": self.class_tag,
            "ok": self.ok,
            "checks": self.checks,
            "violations": [v.to_dict() for v in self.violations],
        }


CLASS_TAGS = ("graph", "npartite", "semigeneric")


def validate(structure: PartitionedTournament, class_tag: str,
             budget: int = SEMIGENERIC_CHECK_BUDGET) -> ValidationReport:
    """Check membership of `structure` in the named class.

    Every violated condition is reported with a concrete witness pair or
    quadruple.  The semigeneric parity sweep is O(k^2 s^4); beyond `budget`
    elementary checks a CapacityError asks for the sampled oracle instead.
    """
    if class_tag not in CLASS_TAGS:
        raise InputError(f"unknown class tag {class_tag!r}")
    violations: list[Violation] = []
    checks = 0
    if class_tag == "graph":
        # Arc direction and parts carry no meaning for graphs; the digraph
        # invariants (no loops, antisymmetry) already hold by construction.
        return ValidationReport(class_tag, (), 0)

    dg = structure.digraph
    for u in range(structure.n):
        for v in range(u + 1, structure.n):
            checks += 1
            o = dg.orientation(u, v)
            if structure.same_part(u, v):
                if o != 0:
                    violations.append(Violation("arc-within-part", (u, v), "vertices share a part but are adjacent"))
            elif o == 0:
                violations.append(Violation("missing-arc", (u, v), "cross-part vertices are non-adjacent"))

    if class_tag == "semigeneric" and not violations:
        parts = structure.parts
        cost = 0
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                si, sj = len(parts[i]), len(parts[j])
                cost += (si * (si - 1) // 2) * (sj * (sj - 1) // 2)
        if cost > budget:
            raise CapacityError(
                f"exhaustive parity sweep needs {cost} checks (budget {budget}); "
                "use the sampled oracle check", required=cost)
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                for a, b in itertools.combinations(parts[i], 2):
                    for c, d in itertools.combinations(parts[j], 2):
                        checks += 1
                        count = sum((
                            dg.has_arc(a, c), dg.has_arc(a, d),
                            dg.has_arc(b, c), dg.has_arc(b, d)))
                        if count % 2:
                            violations.append(Violation(
                                "odd-parity", (a, b, c, d),
                                f"{count} arcs directed from {{{a},{b}}} to {{{c},{d}}}"))
    return ValidationReport(class_tag, tuple(violations), checks)


def is_partial_automorphism(structure, p: PartialMap) -> bool:
    """True iff p preserves the pair relationship on its domain.

    Works for any structure exposing `n` and `pair_code`."""
    for u in p.domain:
        if not 0 <= u < structure.n:
            raise InputError(f"domain vertex {u} out of range")
    for _, v in p.pairs:
        if not 0 <= v < structure.n:
            raise InputError(f"range vertex {v} out of range")
    m = p.as_dict
    for u, w in itertools.combinations(p.domain, 2):
        if structure.pair_code(u, w) != structure.pair_code(m[u], m[w]):
            return False
    return True


def pad_to_equal_parts(structure: PartitionedTournament) -> tuple[PartitionedTournament, tuple[int, ...]]:
    """Grow every part to the size of the largest one by cloning twins.

    Each added vertex copies the arc profile of the least vertex of its
    part (twins provably preserve semigenericity).  Returns the padded
    structure and an origin table: origin[v] is v for original vertices
    and the cloned source id for added ones.
    """
    sizes = [len(p) for p in structure.parts]
    if not sizes:
        return structure, ()
    target = max(sizes)
    n0 = structure.n
    part_of = list(structure.part_of)
    origin = list(range(n0))
    arcs = list(structure.digraph.arcs())
    next_id = n0
    for pid, members in enumerate(structure.parts):
        source = members[0]
        for _ in range(target - len(members)):
            clone = next_id
            next_id += 1
            part_of.append(pid)
            origin.append(source)
            for u in range(n0):
                o = structure.orientation(source, u)
                if o == 1:
                    arcs.append((clone, u))
                elif o == -1:
                    arcs.append((u, clone))
    # Clones of one part are mutually non-adjacent and non-adjacent to their
    # source; clones of different parts inherit the sources' arc.
    for v in range(n0, next_id):
        for w in range(v + 1, next_id):
            if part_of[v] != part_of[w]:
                o = structure.orientation(origin[v], origin[w])
                if o == 1:
                    arcs.append((v, w))
                elif o == -1:
                    arcs.append((w, v))
    padded = PartitionedTournament.build(next_id, part_of, arcs)
    return padded, tuple(origin)


def parse(text: str) -> PartitionedTournament:
    """Parse the `.pt` text format (see `serialize`)."""
    n = None
    parts: list[int] | None = None
    arcs: list[tuple[int, int]] = []
    stage = "vertices"
    ended = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ended:
            raise InputError(f"line {lineno}: content after 'end'")
        fields = line.split()
        if stage == "vertices":
            if fields[0] != "vertices" or len(fields) != 2:
                raise InputError(f"line {lineno}: expected 'vertices <n>'")
            try:
                n = int(fields[1])
            except ValueError:
                raise InputError(f"line {lineno}: vertex count is not an integer") from None
            if n < 0:
                raise InputError(f"line {lineno}: negative vertex count")
            stage = "parts"
        elif stage == "parts":
            if fields[0] != "parts":
                raise InputError(f"line {lineno}: expected 'parts <p0> ... <p{n - 1}>'")
            try:
                parts = [int(f) for f in fields[1:]]
            except ValueError:
                raise InputError(f"line {lineno}: part ids must be integers") from None
            if len(parts) != n:
                raise InputError(f"line {lineno}: expected {n} part ids, got {len(parts)}")
            stage = "edges"
        elif stage == "edges":
            if fields != ["edges"]:
                raise InputError(f"line {lineno}: expected 'edges'")
            stage = "arcs"
        elif stage == "arcs":
            if fields == ["end"]:
                ended = True
                continue
            if len(fields) != 2:
                raise InputError(f"line {lineno}: expected '<u> <v>' or 'end'")
            try:
                u, v = int(fields[0]), int(fields[1])
            except ValueError:
                raise InputError(f"line {lineno}: arc endpoints must be integers") from None
            if n is None or not (0 <= u < n and 0 <= v < n):
                raise InputError(f"line {lineno}: arc ({u},{v}) out of range")
            if u == v:
                raise InputError(f"line {lineno}: loop at vertex {u}")
            if (u, v) in arcs:
                raise InputError(f"line {lineno}: duplicate arc ({u},{v})")
            if (v, u) in arcs:
                raise InputError(f"line {lineno}: arcs ({v},{u}) and ({u},{v}) violate antisymmetry")
            arcs.append((u, v))
    if not ended:
        raise InputError("missing 'end' line")
    try:
        return PartitionedTournament.build(n, parts, arcs)
    except StructureError as exc:
        raise InputError(str(exc)) from None


def serialize(structure: PartitionedTournament) -> str:
    lines = [f"vertices {structure.n}"]
    lines.append(" ".join(["parts", *map(str, structure.part_of)]).rstrip())
    lines.append("edges")
    for u, v in sorted(structure.digraph.arcs()):
        lines.append(f"{u} {v}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_partial_map(text: str) -> PartialMap:
    """Parse the `.pmap` format: one '<u> -> <v>' line per pair."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 3 or fields[1] != "->":
            raise InputError(f"line {lineno}: expected '<u> -> <v>'")
        try:
            pairs.append((int(fields[0]), int(fields[2])))
        except ValueError:
            raise InputError(f"line {lineno}: endpoints must be integers") from None
    try:
        return PartialMap.from_pairs(pairs)
    except StructureError as exc:
        raise InputError(str(exc)) from None


def serialize_partial_map(p: PartialMap) -> str:
    return "".join(f"{u} -> {v}\n" for u, v in p.pairs)


def permute_mask(mask: int, perm) -> int:
    """Image of a vertex bitmask under a vertex permutation."""
    out = 0
    while mask:
        low = mask & -mask
        out |= 1 << perm[low.bit_length() - 1]
        mask ^= low
    return out


def is_automorphism(structure: PartitionedTournament, f) -> bool:
    """Full check that f (an image tuple) is an automorphism: the part
    partition is preserved and the permuted arc rows match exactly."""
    n = structure.n
    if len(f) != n or sorted(f) != list(range(n)):
        return False
    for part in structure.parts:
        if len({structure.part_of[f[v]] for v in part}) != 1:
            return False
    rows = structure.digraph.out_rows
    for v in range(n):
        if permute_mask(rows[v], f) != rows[f[v]]:
            return False
    return True


def complete_part_preserving(structure: PartitionedTournament, p: PartialMap) -> tuple[int, ...]:
    """Complete a part-respecting partial injection to a part-preserving
    bijection: parts are matched by the induced part injection (remaining
    parts paired up in increasing id order), vertices within a part in
    increasing id order.  Requires equal part sizes (pad first)."""
    sizes = {len(part) for part in structure.parts}
    if len(sizes) > 1:
        raise PreconditionError("part sizes must be equal (pad first)")
    iota: dict[int, int] = {}
    for u, v in p.pairs:
        pu, pv = structure.part_of[u], structure.part_of[v]
        if pu in iota and iota[pu] != pv:
            raise InputError("map does not induce a part injection")
        iota[pu] = pv
    if len(set(iota.values())) != len(iota):
        raise InputError("map does not induce a part injection")
    taken = set(iota.values())
    free = iter(q for q in range(structure.k) if q not in taken)
    iota_hat = dict(iota)
    for q in range(structure.k):
        if q not in iota_hat:
            iota_hat[q] = next(free)
    out = [-1] * structure.n
    for u, v in p.pairs:
        out[u] = v
    mapped = set(p.range)
    for q in range(structure.k):
        targets = iter(v for v in structure.parts[iota_hat[q]] if v not in mapped)
        for u in structure.parts[q]:
            if out[u] < 0:
                out[u] = next(targets)
    return tuple(out)


def enumerate_partial_automorphisms(structure, max_domain_size: int) -> Iterator[PartialMap]:
    """Yield every partial automorphism with |Dom| <= max_domain_size once.

    Depth-first over domain vertices in increasing id order, images in
    increasing id order; works for any structure exposing `n`/`pair_code`.
    """
    n = structure.n
    if max_domain_size > n:
        raise InputError("max_domain_size exceeds the vertex count")
    code = structure.pair_code

    def rec(start: int, pairs: list[tuple[int, int]], used: set[int]):
        yield PartialMap(tuple(pairs))
        if len(pairs) == max_domain_size:
            return
        for u in range(start, n):
            for v in range(n):
                if v in used:
                    continue
                if all(code(u, w) == code(v, x) for w, x in pairs):
                    pairs.append((u, v))
                    used.add(v)
                    yield from rec(u + 1, pairs, used)
                    used.remove(v)
                    pairs.pop()

    yield from rec(0, [], set())
