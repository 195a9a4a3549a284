"""Jaro-Winkler name similarity and its discretization to levels {1, 2, 3}."""
from __future__ import annotations

from typing import Iterable

from .model import Entity, Instance, RelationStore, ValidationError, canonical_pair

#: (level, minimum raw Jaro-Winkler similarity), checked highest first.
DEFAULT_LEVEL_THRESHOLDS = ((3, 0.95), (2, 0.88), (1, 0.80))


def jaro(s1: str, s2: str) -> float:
    if s1 == s2:
        return 1.0
    len1, len2 = len(s1), len(s2)
    if len1 == 0 or len2 == 0:
        return 0.0

    window = max(max(len1, len2) // 2 - 1, 0)
    matched1 = [False] * len1
    matched2 = [False] * len2
    matches = 0
    for i in range(len1):
        start = max(0, i - window)
        end = min(i + window + 1, len2)
        for j in range(start, end):
            if matched2[j] or s1[i] != s2[j]:
                continue
            matched1[i] = True
            matched2[j] = True
            matches += 1
            break
    if matches == 0:
        return 0.0

    transpositions = 0
    k = 0
    for i in range(len1):
        if not matched1[i]:
            continue
        while not matched2[k]:
            k += 1
        if s1[i] != s2[k]:
            transpositions += 1
        k += 1
    transpositions //= 2

    return (
        matches / len1 + matches / len2 + (matches - transpositions) / matches
    ) / 3.0


def jaro_winkler(s1: str, s2: str, prefix_scale: float = 0.1) -> float:
    score = jaro(s1, s2)
    prefix = 0
    for a, b in zip(s1[:4], s2[:4]):
        if a != b:
            break
        prefix += 1
    return score + prefix * prefix_scale * (1.0 - score)


def entity_name(entity: Entity) -> str:
    name = entity.name()
    if name is None:
        raise ValidationError(f"entity {entity.id!r} has no name attributes")
    return name


def discretize_similarity(a: Entity, b: Entity, thresholds=None) -> int | None:
    """Similarity level of two named entities, or None below every threshold.

    Symmetric: depends only on the two concatenated names.
    """
    thresholds = DEFAULT_LEVEL_THRESHOLDS if thresholds is None else thresholds
    score = jaro_winkler(entity_name(a), entity_name(b))
    for level, cutoff in thresholds:
        if score >= cutoff:
            return level
    return None


def default_block_key(entity: Entity):
    """Cheap blocking key: first letters of the first and last name token.

    Only entity pairs sharing a key are compared when building Similar
    tuples or canopies, keeping large corpora out of the all-pairs regime.
    """
    name = entity.name()
    if not name:
        return None
    tokens = name.split()
    return (tokens[0][:1].casefold(), tokens[-1][:1].casefold())


def blocked_candidate_pairs(instance: Instance, block_key=default_block_key):
    """Candidate id pairs for similarity computation, grouped by block key."""
    blocks: dict = {}
    for eid in sorted(instance.entities):
        ent = instance.entities[eid]
        key = block_key(ent) if block_key is not None else ()
        if key is None:
            continue
        blocks.setdefault(key, []).append(eid)
    for ids in blocks.values():
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                yield canonical_pair(a, b)


def build_similar_tuples(
    instance: Instance, thresholds=None, block_key=default_block_key
) -> Instance:
    """Return a new instance with Similar tuples computed from entity names.

    Existing Similar tuples are kept; computed levels merge by maximum.
    """
    rows = list(instance.store.rows())
    existing = instance.store.tuples("Similar")
    for pair in blocked_candidate_pairs(instance, block_key):
        if pair in existing:
            continue
        level = discretize_similarity(
            instance.entities[pair[0]], instance.entities[pair[1]], thresholds
        )
        if level is not None:
            rows.append(("Similar", pair, level))
    return instance.with_store(RelationStore.from_rows(rows))
