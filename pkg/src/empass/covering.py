"""Neighborhood covers: canopy blocking, boundary expansion, totality.

A cover is a family of entity subsets (neighborhoods) whose union is the
instance.  A cover is *total* when every relation tuple is induced by at
least one neighborhood; tuples outside all neighborhoods would otherwise
never contribute evidence.  Expanding every neighborhood by its boundary
(entities co-occurring in a tuple with a member) makes any cover total in a
single round.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .model import (
    Instance,
    MatchSet,
    RelationStore,
    ValidationError,
    induced_relations,
)
from .similarity import default_block_key, entity_name, jaro_winkler


@dataclass(frozen=True)
class Neighborhood:
    index: int
    members: frozenset
    induced: RelationStore

    @property
    def size(self) -> int:
        return len(self.members)


class Cover:
    """An immutable list of neighborhoods plus an entity membership index."""

    def __init__(self, neighborhoods: Sequence[Neighborhood], total: bool | None = None):
        self.neighborhoods = tuple(neighborhoods)
        self.total = total
        index: dict[str, list[int]] = {}
        for nbhd in self.neighborhoods:
            for entity in nbhd.members:
                index.setdefault(entity, []).append(nbhd.index)
        self._index = {e: tuple(ids) for e, ids in index.items()}

    @classmethod
    def of(cls, instance: Instance, member_sets: Iterable[Iterable[str]],
           total: bool | None = None) -> "Cover":
        neighborhoods = []
        for i, members in enumerate(member_sets):
            members = frozenset(members)
            neighborhoods.append(
                Neighborhood(i, members, instance.induced(members))
            )
        return cls(neighborhoods, total)

    def __len__(self):
        return len(self.neighborhoods)

    def __iter__(self):
        return iter(self.neighborhoods)

    def containing(self, entity: str) -> tuple[int, ...]:
        return self._index.get(entity, ())

    def covered(self) -> frozenset:
        return frozenset(self._index)

    def max_size(self) -> int:
        return max((n.size for n in self.neighborhoods), default=0)

    def prefix(self, count: int) -> "Cover":
        return Cover(self.neighborhoods[:count])

    def size_histogram(self) -> dict[int, int]:
        histogram: dict[int, int] = {}
        for nbhd in self.neighborhoods:
            histogram[nbhd.size] = histogram.get(nbhd.size, 0) + 1
        return dict(sorted(histogram.items()))


def canopy_cover(
    instance: Instance,
    loose: float,
    tight: float,
    block_key: Callable | None = default_block_key,
) -> Cover:
    """Two-threshold canopy blocking over entity names.

    Seeds are picked in lexicographic id order.  Each seed's canopy holds
    every candidate whose name similarity is at least ``loose``; candidates
    at least ``tight`` similar leave the seed pool.  Entities without a name
    become singleton neighborhoods (they join real neighborhoods later via
    boundary expansion).  The result always covers every entity.
    """
    if not (0.0 <= loose <= tight <= 1.0):
        raise ValidationError(
            f"need 0 <= loose <= tight <= 1, got loose={loose}, tight={tight}"
        )
    named: dict = {}
    unnamed = []
    for eid in sorted(instance.entities):
        entity = instance.entities[eid]
        name = entity.name()
        if name is None:
            unnamed.append(eid)
        else:
            key = block_key(entity) if block_key is not None else ()
            named.setdefault(key, []).append((eid, name))

    member_sets: list[frozenset] = []
    for key in sorted(named):
        block = named[key]
        remaining = {eid for eid, _ in block}
        for seed_id, seed_name in block:
            if seed_id not in remaining:
                continue
            canopy = {seed_id}
            for eid, name in block:
                score = jaro_winkler(seed_name, name)
                if score >= loose:
                    canopy.add(eid)
                if score >= tight:
                    remaining.discard(eid)
            member_sets.append(frozenset(canopy))
    member_sets.extend(frozenset((eid,)) for eid in unnamed)
    return Cover.of(instance, member_sets)


def boundary(
    members: Iterable[str],
    store: RelationStore,
    relations: Iterable[str] | None = None,
) -> frozenset:
    """Entities co-occurring in some relation tuple with a member of the set,
    excluding the members themselves.  ``relations`` restricts which
    relations are scanned (all by default)."""
    members = frozenset(members)
    wanted = None if relations is None else frozenset(relations)
    out: set[str] = set()
    for name, tup in store.incident_tuples(members):
        if wanted is None or name in wanted:
            out.update(e for e in tup if e not in members)
    return frozenset(out)


def make_total(cover: Cover, instance: Instance) -> Cover:
    """Expand every neighborhood by its boundary; the result is total.

    One expansion round suffices: every tuple has some entity inside some
    neighborhood (covers union to the entity set), and the boundary pulls in
    all of that tuple's other entities.
    """
    expanded = [
        nbhd.members | boundary(nbhd.members, instance.store)
        for nbhd in cover.neighborhoods
    ]
    out = Cover.of(instance, expanded, total=True)
    ok, missing = verify_total(out, instance.store)
    if not ok:
        raise RuntimeError(
            f"boundary expansion left {len(missing)} tuples uncovered; "
            "this indicates corrupt cover state"
        )
    return out


def verify_total(cover: Cover, store: RelationStore) -> tuple[bool, tuple]:
    """Check that every relation tuple is induced by some neighborhood;
    returns the missing tuples otherwise."""
    covered: set = set()
    for nbhd in cover.neighborhoods:
        for name, tuples in nbhd.induced.relations.items():
            covered.update((name, t) for t in tuples)
    missing = []
    for name, tuples in store.relations.items():
        for t in tuples:
            if (name, t) not in covered:
                missing.append((name, t))
    missing.sort()
    return (not missing, tuple(missing))


def dumps_cover(cover: Cover) -> str:
    lines = [
        json.dumps(
            {"neighborhood": nbhd.index, "members": sorted(nbhd.members)},
            sort_keys=True,
            separators=(",", ":"),
        )
        for nbhd in cover.neighborhoods
    ]
    return "\n".join(lines) + "\n"


def loads_cover(text: str, instance: Instance) -> Cover:
    member_sets = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        member_sets.append(record["members"])
    return Cover.of(instance, member_sets)
