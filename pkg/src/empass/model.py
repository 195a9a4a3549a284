"""Entities, relations, canonical pairs and evidence sets.

An instance is a collection of typed entities (authors, papers, ...) plus
named relations over them.  Match decisions are always expressed as
canonical unordered pairs: ``(lo, hi)`` with ``lo < hi`` under lexicographic
id order.  Reflexive pairs are never materialized; every entity is
implicitly equal to itself.

All values here are immutable after construction and safe to share across
concurrent workers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

#: A canonical unordered entity pair: (lo, hi) with lo < hi.
Pair = tuple[str, str]

#: A duplicate-free set of canonical pairs.
MatchSet = frozenset

EMPTY_MATCHES: MatchSet = frozenset()

#: Relations whose tuples are unordered.  They are stored once, in
#: canonical (lo, hi) order, and rule grounding matches the stored
#: orientation literally.
SYMMETRIC_RELATIONS = frozenset({"Similar", "Coauthor"})

#: Valid discretized similarity levels, highest is most similar.
SIMILARITY_LEVELS = (1, 2, 3)


class ValidationError(ValueError):
    """Raised for malformed instances, evidence, files or parameters."""


def canonical_pair(a: str, b: str) -> Pair:
    """Return the canonical ordering of ``{a, b}``; reject reflexive input."""
    if a == b:
        raise ValidationError(f"reflexive pair ({a!r}, {a!r}) is not representable")
    return (a, b) if a < b else (b, a)


def canonical_pairs(items: Iterable[tuple[str, str]]) -> MatchSet:
    return frozenset(canonical_pair(a, b) for a, b in items)


@dataclass(frozen=True)
class Entity:
    """A single entity reference.  ``attrs`` may cover only part of the
    kind's attribute schema."""

    id: str
    kind: str
    attrs: Mapping[str, str] = field(default_factory=dict)

    def name(self) -> str | None:
        """Display name for author-like entities, or None if unnamed."""
        if "name" in self.attrs:
            return self.attrs["name"]
        fname = self.attrs.get("fname")
        lname = self.attrs.get("lname")
        if fname is None and lname is None:
            return None
        return " ".join(part for part in (fname, lname) if part)


@dataclass(frozen=True)
class RelationStore:
    """Named relations over entity ids.

    ``Similar`` tuples carry a discretized level in {1, 2, 3}, kept in
    ``similar_levels`` keyed by the canonical pair.  A lazy per-entity
    incidence index keeps neighborhood restriction linear in the
    neighborhood's own tuples instead of the whole store.
    """

    relations: Mapping[str, frozenset]
    similar_levels: Mapping[Pair, int] = field(default_factory=dict)

    def _incidence(self) -> Mapping[str, list]:
        cached = getattr(self, "_incidence_cache", None)
        if cached is None:
            cached = {}
            for name, tuples in self.relations.items():
                for t in tuples:
                    for e in set(t):
                        cached.setdefault(e, []).append((name, t))
            object.__setattr__(self, "_incidence_cache", cached)
        return cached

    def incident_tuples(self, members: Iterable[str]) -> Iterator[tuple]:
        """(relation, tuple) rows touching any of ``members``, deduplicated."""
        incidence = self._incidence()
        seen = set()
        for e in members:
            for row in incidence.get(e, ()):
                if row not in seen:
                    seen.add(row)
                    yield row

    @classmethod
    def from_rows(cls, rows: Iterable[tuple]) -> "RelationStore":
        """Build a store from ``(relation, args)`` or ``(relation, args, level)``
        rows, canonicalizing symmetric relations and deduplicating."""
        relations: dict[str, set] = {}
        levels: dict[Pair, int] = {}
        for row in rows:
            rel, args = row[0], tuple(row[1])
            level = row[2] if len(row) > 2 else None
            if len(args) < 2:
                raise ValidationError(f"relation tuple needs arity >= 2: {row!r}")
            if rel in SYMMETRIC_RELATIONS:
                if len(args) != 2:
                    raise ValidationError(f"{rel} tuples must be binary: {row!r}")
                args = canonical_pair(*args)
            if rel == "Similar":
                if level not in SIMILARITY_LEVELS:
                    raise ValidationError(
                        f"Similar tuple {args!r} needs a level in {SIMILARITY_LEVELS}"
                    )
                levels[args] = max(level, levels.get(args, 0))
            relations.setdefault(rel, set()).add(args)
        return cls(
            {name: frozenset(tuples) for name, tuples in relations.items()},
            dict(levels),
        )

    def tuples(self, relation: str) -> frozenset:
        return self.relations.get(relation, frozenset())

    def level_of(self, pair: Pair) -> int | None:
        return self.similar_levels.get(pair)

    def rows(self) -> Iterator[tuple]:
        """All tuples as (relation, args, level-or-None) rows, sorted."""
        for rel in sorted(self.relations):
            for args in sorted(self.relations[rel]):
                if rel == "Similar":
                    yield (rel, args, self.similar_levels[args])
                else:
                    yield (rel, args, None)

    def entity_ids(self) -> frozenset:
        return frozenset(e for tuples in self.relations.values() for t in tuples for e in t)

    def restrict(self, members: frozenset) -> "RelationStore":
        """The induced store: tuples consisting solely of ``members``."""
        relations: dict[str, set] = {}
        for name, t in self.incident_tuples(members):
            if all(e in members for e in t):
                relations.setdefault(name, set()).add(t)
        similar = relations.get("Similar", ())
        levels = {pair: self.similar_levels[pair] for pair in similar}
        return RelationStore(
            {name: frozenset(tuples) for name, tuples in relations.items()}, levels
        )

    def count(self) -> int:
        return sum(len(t) for t in self.relations.values())


def induced_relations(
    store: RelationStore, members: Iterable[str], known_ids: frozenset | None = None
) -> RelationStore:
    """Restrict ``store`` to tuples whose entities all lie in ``members``.

    Monotone in ``members``.  If ``known_ids`` is given, unknown members are
    rejected.
    """
    members = frozenset(members)
    if known_ids is not None:
        unknown = members - known_ids
        if unknown:
            raise ValidationError(f"unknown entity ids: {sorted(unknown)[:5]}")
    return store.restrict(members)


@dataclass(frozen=True)
class Evidence:
    """Positive and negative match evidence; the two sets never overlap."""

    positive: MatchSet = EMPTY_MATCHES
    negative: MatchSet = EMPTY_MATCHES

    def __post_init__(self):
        overlap = self.positive & self.negative
        if overlap:
            raise ValidationError(
                f"evidence marks pairs as both match and non-match: {sorted(overlap)[:3]}"
            )

    @classmethod
    def of(cls, positive=(), negative=()) -> "Evidence":
        return cls(canonical_pairs(positive), canonical_pairs(negative))


NO_EVIDENCE = Evidence()


def restrict_pairs(pairs: Iterable[Pair], members: frozenset) -> MatchSet:
    """Pairs whose endpoints both lie in ``members``."""
    return frozenset(p for p in pairs if p[0] in members and p[1] in members)


@dataclass(frozen=True, eq=False)
class Instance:
    """A full entity-matching problem: entities plus their relations.

    Compares (and hashes) by identity so matchers can keep per-instance
    caches; compare serialized forms for value equality.
    """

    entities: Mapping[str, Entity]
    store: RelationStore

    def __post_init__(self):
        missing = self.store.entity_ids() - frozenset(self.entities)
        if missing:
            raise ValidationError(
                f"relation tuples mention unknown entities: {sorted(missing)[:5]}"
            )

    def ids(self) -> frozenset:
        return frozenset(self.entities)

    def induced(self, members: Iterable[str]) -> RelationStore:
        return induced_relations(self.store, members, known_ids=self.ids())

    def with_store(self, store: RelationStore) -> "Instance":
        return Instance(self.entities, store)


def make_instance(entities: Iterable, relations: Iterable[tuple] = ()) -> Instance:
    """Convenience constructor.

    ``entities`` items are ``Entity`` values, plain ids, or ``(id, kind)`` /
    ``(id, kind, attrs)`` tuples.  ``relations`` rows are
    ``(relation, arg, arg, ...)`` with a trailing level for ``Similar``.
    """
    table: dict[str, Entity] = {}
    for item in entities:
        if isinstance(item, Entity):
            ent = item
        elif isinstance(item, str):
            ent = Entity(item, "author")
        else:
            ent = Entity(*item)
        if ent.id in table:
            raise ValidationError(f"duplicate entity id {ent.id!r}")
        table[ent.id] = ent
    rows = []
    for row in relations:
        rel = row[0]
        if rel == "Similar":
            rows.append((rel, tuple(row[1:-1]), row[-1]))
        else:
            rows.append((rel, tuple(row[1:])))
    return Instance(table, RelationStore.from_rows(rows))


# ---------------------------------------------------------------------------
# Line-oriented JSON serialization.  One record per entity and one per
# relation tuple; output is fully sorted so round-trips are byte-exact.
# ---------------------------------------------------------------------------

def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def dumps_instance(instance: Instance) -> str:
    lines = []
    for eid in sorted(instance.entities):
        ent = instance.entities[eid]
        lines.append(_dump_json({"id": ent.id, "kind": ent.kind, "attrs": dict(ent.attrs)}))
    for rel, args, level in instance.store.rows():
        record = {"rel": rel, "args": list(args)}
        if level is not None:
            record["level"] = level
        lines.append(_dump_json(record))
    return "\n".join(lines) + "\n"


def loads_instance(text: str) -> Instance:
    entities: dict[str, Entity] = {}
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: invalid JSON ({exc})") from exc
        if "id" in record:
            if record["id"] in entities:
                raise ValidationError(f"line {lineno}: duplicate entity {record['id']!r}")
            entities[record["id"]] = Entity(
                record["id"], record.get("kind", "entity"), record.get("attrs", {})
            )
        elif "rel" in record:
            if "level" in record:
                rows.append((record["rel"], tuple(record["args"]), record["level"]))
            else:
                rows.append((record["rel"], tuple(record["args"])))
        else:
            raise ValidationError(f"line {lineno}: neither an entity nor a relation record")
    return Instance(entities, RelationStore.from_rows(rows))


def dump_matches(pairs: MatchSet) -> str:
    return "".join(_dump_json({"lo": lo, "hi": hi}) + "\n" for lo, hi in sorted(pairs))


def load_matches(text: str) -> MatchSet:
    pairs = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        pairs.append(canonical_pair(record["lo"], record["hi"]))
    return frozenset(pairs)
