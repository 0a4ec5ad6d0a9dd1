"""Brute-force ground truth, deliberately independent of the constructions.

Everything here works from explicit structures (or, for implicit witnesses,
from an opaque orientation predicate handed in by the caller): plain
backtracking over vertices in id order, no canonical forms, no shortcuts.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable, Iterator

from .errors import InputError
from .structures import PartialMap, enumerate_partial_automorphisms, is_partial_automorphism


def enumerate_automorphisms(structure) -> Iterator[tuple[int, ...]]:
    """Yield every automorphism exactly once, as image tuples.

    Backtracking assigns vertices 0,1,2,... in order and tries candidate
    images in increasing id order, pruning on any pair-code mismatch, so
    the stream order is reproducible.
    """
    n = structure.n
    code = structure.pair_code
    images: list[int] = []
    used = [False] * n

    def rec(v: int):
        if v == n:
            yield tuple(images)
            return
        for c in range(n):
            if used[c]:
                continue
            if all(code(v, w) == code(c, images[w]) for w in range(v)):
                images.append(c)
                used[c] = True
                yield from rec(v + 1)
                used[c] = False
                images.pop()

    yield from rec(0)


@dataclass(frozen=True)
class ExtensionCertificate:
    partial: PartialMap
    automorphism: tuple[int, ...] | None

    @property
    def extends(self) -> bool:
        return self.automorphism is not None


def extend_partial_to_automorphism(structure, p: PartialMap) -> ExtensionCertificate:
    """Search for a total automorphism extending p; first hit in
    backtracking order, or a refutation when the search is exhausted."""
    if not is_partial_automorphism(structure, p):
        raise InputError("map is not a partial automorphism of the structure")
    n = structure.n
    code = structure.pair_code
    fixed = p.as_dict
    images: list[int] = []
    used = [False] * n
    for v in fixed.values():
        used[v] = True

    def rec(v: int) -> tuple[int, ...] | None:
        if v == n:
            return tuple(images)
        if v in fixed:
            candidates = (fixed[v],)
        else:
            candidates = (c for c in range(n) if not used[c])
        for c in candidates:
            if all(code(v, w) == code(c, images[w]) for w in range(v)):
                pre_used = used[c]
                images.append(c)
                used[c] = True
                found = rec(v + 1)
                if found is not None:
                    return found
                used[c] = pre_used
                images.pop()
        return None

    return ExtensionCertificate(p, rec(0))


@dataclass(frozen=True)
class EppaReport:
    verdict: bool
    checked: int
    failed: int
    first_counterexample: PartialMap | None

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "checked": self.checked,
            "failed": self.failed,
            "first_counterexample":
                list(self.first_counterexample.pairs) if self.first_counterexample else None,
        }


def is_eppa_witness(a_struct, b_struct, embedding, max_domain: int) -> EppaReport:
    """Check B against every partial automorphism of the embedded copy of A.

    `embedding` must map A into B; partial automorphisms of the copy are
    enumerated directly inside B (as maps on B's vertex ids) and each is
    handed to the backtracking extender.
    """
    imgs = embedding.images
    if len(imgs) != a_struct.n or len(set(imgs)) != len(imgs):
        raise InputError("embedding must be total and injective on A")
    for u, w in itertools.combinations(range(a_struct.n), 2):
        if a_struct.pair_code(u, w) != b_struct.pair_code(imgs[u], imgs[w]):
            raise InputError("map is not an embedding of A into B")
    checked = failed = 0
    first = None
    for p in enumerate_partial_automorphisms(a_struct, max_domain):
        lifted = PartialMap.from_pairs((imgs[u], imgs[v]) for u, v in p.pairs)
        checked += 1
        if not extend_partial_to_automorphism(b_struct, lifted).extends:
            failed += 1
            if first is None:
                first = lifted
    return EppaReport(failed == 0, checked, failed, first)


@dataclass(frozen=True)
class ParityReport:
    verdict: bool
    checks: int
    sampled: bool
    first_counterexample: tuple | None

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "checks": self.checks,
            "sampled": self.sampled,
            "first_counterexample": self.first_counterexample,
        }


def semigeneric_exhaustive(structure) -> ParityReport:
    """Parity sweep over all part pairs and vertex pairs of an explicit
    structure (cross-part adjacency is assumed already validated)."""
    dg = structure.digraph
    parts = structure.parts
    checks = 0
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            for a, b in itertools.combinations(parts[i], 2):
                for c, d in itertools.combinations(parts[j], 2):
                    checks += 1
                    count = sum((dg.has_arc(a, c), dg.has_arc(a, d),
                                 dg.has_arc(b, c), dg.has_arc(b, d)))
                    if count % 2:
                        return ParityReport(False, checks, False, (a, b, c, d))
    return ParityReport(True, checks, False, None)


def semigeneric_sampled(sample_part: Callable[[random.Random], object],
                        sample_vertex_pair: Callable[[random.Random, object], tuple],
                        orientation: Callable[[object, object], int],
                        samples: int, seed: int) -> ParityReport:
    """Parity check on uniformly sampled quadruples of an implicit witness.

    The caller supplies the vertex sampler and the orientation predicate;
    this routine owns only the sampling discipline and the parity test.
    """
    rng = random.Random(seed)
    for step in range(samples):
        qi = sample_part(rng)
        qj = sample_part(rng)
        while qj == qi:
            qj = sample_part(rng)
        a, b = sample_vertex_pair(rng, qi)
        c, d = sample_vertex_pair(rng, qj)
        count = sum((orientation(a, c) == 1, orientation(a, d) == 1,
                     orientation(b, c) == 1, orientation(b, d) == 1))
        if count % 2:
            return ParityReport(False, step + 1, True, (a, b, c, d))
    return ParityReport(True, samples, True, None)
