"""Deterministic datalog-style matcher over hard similarity/coauthor rules.

Three rules, applied jointly with transitive closure to a least fixpoint:

1. a level-3 similar pair is a match;
2. a level-2 similar pair with one common (or matched) coauthor pair is a
   match;
3. a level-1 similar pair needs two distinct common/matched coauthor pairs.

"Common coauthor" is symmetric: c witnesses for (a, b) whenever c appears in
a coauthor tuple with a and one with b, regardless of stored orientation.
Negative evidence pins pairs false: they are never seeded, derived, or
produced by closure.
"""
from __future__ import annotations

from typing import Iterable

from .model import (
    Evidence,
    Instance,
    MatchSet,
    NO_EVIDENCE,
    Pair,
    RelationStore,
    canonical_pair,
    restrict_pairs,
)


def _coauthor_adjacency(store: RelationStore) -> dict[str, set[str]]:
    adjacency: dict[str, set[str]] = {}
    for a, b in store.tuples("Coauthor"):
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    return adjacency


def _witnesses(a: str, b: str, adjacency, matched: set[Pair]) -> set[frozenset]:
    """Coauthor pair witnesses for matching (a, b): unordered pairs {u, v}
    with u a coauthor of a, v a coauthor of b, and u == v or (u, v) matched."""
    found: set[frozenset] = set()
    for u in adjacency.get(a, ()):
        for v in adjacency.get(b, ()):
            if u == v or canonical_pair(u, v) in matched:
                found.add(frozenset((u, v)))
    return found


def _closure(matched: set[Pair], banned: frozenset) -> set[Pair]:
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        root = x
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for a, b in matched:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
    groups: dict[str, list[str]] = {}
    for node in parent:
        groups.setdefault(find(node), []).append(node)
    closed = set(matched)
    for group in groups.values():
        group.sort()
        for i, a in enumerate(group):
            for b in group[i + 1 :]:
                pair = (a, b)
                if pair not in banned:
                    closed.add(pair)
    return closed


def rules_match(
    instance: Instance,
    entities: Iterable[str],
    evidence: Evidence = NO_EVIDENCE,
    store: RelationStore | None = None,
) -> MatchSet:
    members = frozenset(entities)
    induced = store if store is not None else instance.induced(members)
    adjacency = _coauthor_adjacency(induced)
    banned = evidence.negative
    # evidence pairs outside the member set stay in the working set: they can
    # bridge transitive chains, but cannot witness rules (no induced edges).
    matched: set[Pair] = set(evidence.positive - banned)
    similar = sorted(induced.tuples("Similar"))

    changed = True
    while changed:
        changed = False
        for pair in similar:
            if pair in matched or pair in banned:
                continue
            level = induced.level_of(pair)
            if level == 3:
                ok = True
            elif level == 2:
                ok = bool(_witnesses(*pair, adjacency, matched))
            elif level == 1:
                ok = len(_witnesses(*pair, adjacency, matched)) >= 2
            else:
                ok = False
            if ok:
                matched.add(pair)
                changed = True
        closed = _closure(matched, banned)
        if closed != matched:
            matched = closed
            changed = True

    return restrict_pairs(matched, members) - banned


class RulesMatcher:
    """Monotone deterministic matcher; selectable by the name ``rules``."""

    kind = "deterministic"

    def __init__(self, name: str = "rules"):
        self.name = name

    def match(
        self,
        instance: Instance,
        entities: Iterable[str],
        evidence: Evidence = NO_EVIDENCE,
        store: RelationStore | None = None,
    ) -> MatchSet:
        return rules_match(instance, entities, evidence, store)

    def match_detailed(
        self,
        instance: Instance,
        entities: Iterable[str],
        evidence: Evidence = NO_EVIDENCE,
        store: RelationStore | None = None,
    ) -> tuple[MatchSet, bool]:
        return rules_match(instance, entities, evidence, store), True
