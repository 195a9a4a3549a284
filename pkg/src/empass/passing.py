"""Simple and maximal message passing over a neighborhood cover.

Both runners keep a FIFO queue of active neighborhoods with set semantics.
Visiting a neighborhood runs the matcher with all matches found so far as
positive evidence; any new matches re-activate every neighborhood sharing an
entity with them.  The maximal scheme additionally pools all-or-none
*maximal messages* (sets of correlated candidate matches), merges
overlapping messages into disjoint unions, and promotes a pooled message
into the match set whenever doing so does not lower the global score.

For well-behaved matchers the outcome is sound (a subset of the holistic
run) and independent of the visit order; the per-neighborhood visit count is
bounded by the squared maximum neighborhood size.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .contract import MatcherError, is_probabilistic
from .covering import Cover, Neighborhood
from .model import EMPTY_MATCHES, Evidence, Instance, MatchSet, Pair, canonical_pair


@dataclass(frozen=True)
class MaximalMessage:
    """An all-or-none set of correlated candidate matches."""

    pairs: MatchSet

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("a maximal message cannot be empty")

    def sorted_pairs(self):
        return tuple(sorted(self.pairs))


def normalize(messages: Iterable) -> tuple[MaximalMessage, ...]:
    """Merge overlapping messages until all are pairwise disjoint.

    Overlapping maximal messages stay maximal under union, so the merge
    preserves meaning; the result does not depend on merge order.
    """
    pair_owner: dict[Pair, int] = {}
    groups: dict[int, set] = {}
    next_id = 0
    for message in messages:
        pairs = message.pairs if isinstance(message, MaximalMessage) else frozenset(message)
        touched = sorted({pair_owner[p] for p in pairs if p in pair_owner})
        merged = set(pairs)
        for gid in touched:
            merged |= groups.pop(gid)
        gid = next_id
        next_id += 1
        groups[gid] = merged
        for p in merged:
            pair_owner[p] = gid
    out = [MaximalMessage(frozenset(g)) for g in groups.values()]
    out.sort(key=lambda m: m.sorted_pairs())
    return tuple(out)


def neighbor_set(delta: Iterable[Pair], cover: Cover) -> tuple[int, ...]:
    """Neighborhoods containing at least one entity of at least one pair."""
    out: set[int] = set()
    for lo, hi in delta:
        out.update(cover.containing(lo))
        out.update(cover.containing(hi))
    return tuple(sorted(out))


@dataclass
class RunState:
    """Counters and optional trace for one message-passing run."""

    scheme: str
    found: MatchSet = EMPTY_MATCHES
    visits: Counter = field(default_factory=Counter)
    invocations: int = 0
    exact: bool = True
    pool: tuple[MaximalMessage, ...] = ()
    events: list | None = None

    def record(self, **event):
        if self.events is not None:
            self.events.append(event)


class _ActiveQueue:
    """FIFO queue with set semantics; a seeded rng switches to random pops
    (used by the order-independence tests)."""

    def __init__(self, ids: Iterable[int], rng=None):
        self._items = list(ids)
        self._present = set(self._items)
        self._rng = rng

    def __bool__(self):
        return bool(self._items)

    def pop(self) -> int:
        index = self._rng.randrange(len(self._items)) if self._rng is not None else 0
        item = self._items.pop(index)
        self._present.discard(item)
        return item

    def extend(self, ids: Iterable[int]):
        for i in ids:
            if i not in self._present:
                self._present.add(i)
                self._items.append(i)


def _match_detailed(matcher, instance, nbhd: Neighborhood, evidence: Evidence):
    try:
        detailed = getattr(matcher, "match_detailed", None)
        if detailed is not None:
            return detailed(instance, nbhd.members, evidence, nbhd.induced)
        return matcher.match(instance, nbhd.members, evidence, nbhd.induced), True
    except MatcherError:
        raise
    except Exception as exc:
        raise MatcherError(
            f"matcher {matcher.name!r} failed on neighborhood {nbhd.index}: {exc}",
            neighborhood=nbhd.index,
        ) from exc


def _check_visit_bound(state: RunState, cid: int, bound: int):
    state.visits[cid] += 1
    if state.visits[cid] > bound:
        raise MatcherError(
            f"neighborhood {cid} visited {state.visits[cid]} times, over the "
            f"k^2 bound of {bound}; the matcher is likely not well-behaved",
            neighborhood=cid,
            partial=state,
        )


def no_mp(matcher, instance: Instance, cover: Cover) -> tuple[MatchSet, RunState]:
    """One matcher pass per neighborhood with no evidence exchange."""
    state = RunState("no-mp")
    found: set[Pair] = set()
    for nbhd in cover:
        matched, exact = _match_detailed(matcher, instance, nbhd, Evidence())
        state.invocations += 1
        state.exact = state.exact and exact
        state.visits[nbhd.index] += 1
        found |= matched
    state.found = frozenset(found)
    return state.found, state


def smp(
    matcher,
    instance: Instance,
    cover: Cover,
    rng=None,
    record_events: bool = False,
) -> tuple[MatchSet, RunState]:
    """Simple message passing: confirmed matches circulate as evidence."""
    state = RunState("smp", events=[] if record_events else None)
    bound = max(1, cover.max_size() ** 2)
    queue = _ActiveQueue(range(len(cover)), rng)
    found: MatchSet = EMPTY_MATCHES
    while queue:
        cid = queue.pop()
        nbhd = cover.neighborhoods[cid]
        _check_visit_bound(state, cid, bound)
        try:
            matched, exact = _match_detailed(matcher, instance, nbhd, Evidence(found))
        except MatcherError as exc:
            exc.partial = state
            raise
        state.invocations += 1
        state.exact = state.exact and exact
        delta = matched - found
        if delta:
            queue.extend(neighbor_set(delta, cover))
            found = found | delta
        state.record(event="visit", neighborhood=cid, new=sorted(delta),
                     found=sorted(found))
    state.found = found
    return found, state


def compute_maximal(
    matcher,
    instance: Instance,
    nbhd: Neighborhood,
    found: MatchSet,
    unconditional: MatchSet | None = None,
) -> tuple[tuple[MaximalMessage, ...], int]:
    """Maximal messages of one neighborhood given the matches found so far.

    Every candidate pair is tried as extra positive evidence; two candidates
    that entail each other are correlated, and each connected component of
    the entailment graph becomes one message.  Pairs already matched
    unconditionally (and pairs in ``found``) are not candidates.
    """
    if unconditional is None:
        unconditional, _ = _match_detailed(matcher, instance, nbhd, Evidence(found))
    if hasattr(matcher, "candidate_pairs"):
        pairs = matcher.candidate_pairs(instance, nbhd.members, nbhd.induced)
    else:
        pairs = frozenset(
            canonical_pair(a, b)
            for a, b in itertools.combinations(sorted(nbhd.members), 2)
        )
    candidates = sorted(pairs - found - unconditional)
    entailed: dict[Pair, MatchSet] = {}
    invocations = 0
    for p in candidates:
        out, _ = _match_detailed(
            matcher, instance, nbhd, Evidence(found | frozenset((p,)))
        )
        invocations += 1
        entailed[p] = out

    parent = {p: p for p in candidates}

    def find(p):
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    candidate_set = set(candidates)
    for p in candidates:
        for q in entailed[p]:
            if q in candidate_set and q != p and p in entailed[q]:
                rp, rq = find(p), find(q)
                if rp != rq:
                    parent[rq] = rp
    components: dict[Pair, set] = {}
    for p in candidates:
        components.setdefault(find(p), set()).add(p)
    messages = tuple(
        MaximalMessage(frozenset(comp))
        for comp in sorted(components.values(), key=lambda c: sorted(c))
    )
    return messages, invocations


class _MessagePool:
    """Disjoint pool of maximal messages with lazy promotion gains.

    Gains are recomputed only for messages whose groundings a newly found
    match can touch; a supermodular scorer guarantees cached negative gains
    stay negative until then.
    """

    def __init__(self, scorer):
        self.scorer = scorer
        self.entries: dict[int, frozenset] = {}
        self.relevant: dict[int, frozenset] = {}
        self.by_pair: dict[Pair, int] = {}
        self.dirty: set[int] = set()
        self._next = 0

    def snapshot(self) -> tuple[MaximalMessage, ...]:
        return tuple(
            MaximalMessage(pairs)
            for _, pairs in sorted(self.entries.items(), key=lambda kv: sorted(kv[1]))
        )

    def add(self, pairs: frozenset):
        if not pairs:
            return
        touched = sorted({self.by_pair[p] for p in pairs if p in self.by_pair})
        merged = set(pairs)
        for mid in touched:
            merged |= self._remove(mid)
        mid = self._next
        self._next += 1
        merged = frozenset(merged)
        self.entries[mid] = merged
        self.relevant[mid] = self.scorer.relevant_pairs(merged)
        for p in merged:
            self.by_pair[p] = mid
        self.dirty.add(mid)

    def _remove(self, mid: int) -> frozenset:
        pairs = self.entries.pop(mid)
        self.relevant.pop(mid, None)
        self.dirty.discard(mid)
        for p in pairs:
            self.by_pair.pop(p, None)
        return pairs

    def strip(self, matched: frozenset):
        """Drop pairs that entered the match set from all pooled messages."""
        touched = sorted({self.by_pair[p] for p in matched if p in self.by_pair})
        for mid in touched:
            remaining = self._remove(mid) - matched
            if remaining:
                self.entries[mid] = remaining
                self.relevant[mid] = self.scorer.relevant_pairs(remaining)
                for p in remaining:
                    self.by_pair[p] = mid
                self.dirty.add(mid)

    def mark_dirty(self, new_pairs: frozenset):
        for mid, relevant in self.relevant.items():
            if relevant & new_pairs:
                self.dirty.add(mid)

    def promote(self, found: frozenset) -> tuple[frozenset, list[frozenset]]:
        """Move every pooled message whose addition does not lower the score
        into the match set, repeating until none qualifies."""
        promoted: list[frozenset] = []
        while True:
            chosen = None
            for mid in sorted(self.dirty, key=lambda m: sorted(self.entries[m])):
                if self.scorer.gain(found, self.entries[mid]) >= 0:
                    chosen = mid
                    break
                self.dirty.discard(mid)
            if chosen is None:
                return found, promoted
            pairs = self._remove(chosen)
            found = found | pairs
            promoted.append(pairs)
            self.mark_dirty(pairs)


def mmp(
    matcher,
    instance: Instance,
    cover: Cover,
    rng=None,
    record_events: bool = False,
) -> tuple[MatchSet, RunState]:
    """Maximal message passing; requires a probabilistic matcher."""
    if not is_probabilistic(matcher):
        raise MatcherError(
            f"maximal message passing needs a probabilistic matcher, "
            f"got {matcher.name!r}"
        )
    state = RunState("mmp", events=[] if record_events else None)
    k = cover.max_size()
    visit_bound = max(1, k**2)
    universe = frozenset().union(
        frozenset(),
        *(matcher.candidate_pairs(instance, n.members, n.induced) for n in cover),
    )
    scorer = matcher.scorer(instance, universe)
    pool = _MessagePool(scorer)
    queue = _ActiveQueue(range(len(cover)), rng)
    found: MatchSet = EMPTY_MATCHES
    while queue:
        cid = queue.pop()
        nbhd = cover.neighborhoods[cid]
        _check_visit_bound(state, cid, visit_bound)
        try:
            matched, exact = _match_detailed(matcher, instance, nbhd, Evidence(found))
            messages, used = compute_maximal(matcher, instance, nbhd, found, matched)
        except MatcherError as exc:
            exc.partial = state
            raise
        state.invocations += 1 + used
        state.exact = state.exact and exact
        state.record(
            event="messages",
            neighborhood=cid,
            found=sorted(found),
            messages=[m.sorted_pairs() for m in messages],
        )
        new = matched - found
        found = found | new
        pool.strip(found)
        for message in messages:
            pool.add(message.pairs - found)
        pool.mark_dirty(new)
        found, promoted = pool.promote(found)
        delta = frozenset(new).union(*promoted) if promoted else new
        if delta:
            queue.extend(neighbor_set(delta, cover))
        state.record(event="visit", neighborhood=cid, new=sorted(delta),
                     found=sorted(found), promoted=[sorted(p) for p in promoted])
    state.found = found
    state.pool = pool.snapshot()
    invocation_bound = max(1, k**4) * max(1, len(cover))
    if state.invocations > invocation_bound:
        raise MatcherError(
            f"matcher invoked {state.invocations} times, over the k^4*n bound "
            f"of {invocation_bound}",
            partial=state,
        )
    return found, state


SCHEMES = {"no-mp": no_mp, "smp": smp, "mmp": mmp}


def run_scheme(scheme: str, matcher, instance: Instance, cover: Cover, **kwargs):
    try:
        runner = SCHEMES[scheme.lower()]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r} (known: {sorted(SCHEMES)})")
    if runner is no_mp:
        kwargs.pop("rng", None)
        kwargs.pop("record_events", None)
    return runner(matcher, instance, cover, **kwargs)
