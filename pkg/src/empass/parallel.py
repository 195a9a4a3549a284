"""Round-based data-parallel execution of the message-passing schemes.

Each round processes every active neighborhood against the same frozen
evidence snapshot, spread over a worker pool; results merge at a barrier
(matches by union, messages by normalization, then one promotion phase) and
the merged delta activates the next round.  Because matchers are pure
functions of their inputs, the final match set equals the sequential
runner's output regardless of worker count or scheduling.
"""
from __future__ import annotations

import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .contract import MatcherError, is_probabilistic
from .covering import Cover
from .model import EMPTY_MATCHES, Evidence, Instance, MatchSet
from .passing import RunState, _MessagePool, compute_maximal, neighbor_set


@dataclass
class RoundStats:
    round: int
    active: int
    new_matches: int
    wall_seconds: float
    skew: float  # largest worker share over the even share


def _process_bucket(matcher, instance, cover, bucket, snapshot, with_messages):
    results = []
    for cid in bucket:
        nbhd = cover.neighborhoods[cid]
        matched, exact = _detailed(matcher, instance, nbhd, snapshot)
        if with_messages:
            messages, used = compute_maximal(matcher, instance, nbhd, snapshot, matched)
        else:
            messages, used = (), 0
        results.append((cid, matched, exact, messages, 1 + used))
    return results


def _detailed(matcher, instance, nbhd, snapshot):
    detailed = getattr(matcher, "match_detailed", None)
    if detailed is not None:
        return detailed(instance, nbhd.members, Evidence(snapshot), nbhd.induced)
    return matcher.match(instance, nbhd.members, Evidence(snapshot), nbhd.induced), True


def run_parallel(
    matcher,
    instance: Instance,
    cover: Cover,
    workers: int = 1,
    scheme: str = "smp",
    seed: int = 0,
) -> tuple[MatchSet, RunState, list[RoundStats]]:
    """Run SMP or MMP in barrier-synchronous rounds over ``workers`` threads."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    scheme = scheme.lower()
    if scheme not in ("smp", "mmp"):
        raise ValueError(f"parallel scheme must be smp or mmp, got {scheme!r}")
    with_messages = scheme == "mmp"
    if with_messages and not is_probabilistic(matcher):
        raise MatcherError("maximal message passing needs a probabilistic matcher")

    state = RunState(f"parallel-{scheme}")
    rng = random.Random(seed)
    pool = None
    if with_messages:
        universe = frozenset().union(
            frozenset(),
            *(matcher.candidate_pairs(instance, n.members, n.induced) for n in cover),
        )
        pool = _MessagePool(matcher.scorer(instance, universe))

    found: MatchSet = EMPTY_MATCHES
    active = sorted(range(len(cover)))
    stats: list[RoundStats] = []
    round_index = 0
    with ThreadPoolExecutor(max_workers=workers) as executor:
        while active:
            start = time.perf_counter()
            shuffled = list(active)
            rng.shuffle(shuffled)
            buckets = [shuffled[i::workers] for i in range(workers)]
            buckets = [b for b in buckets if b]
            futures = [
                executor.submit(
                    _process_bucket, matcher, instance, cover, bucket, found, with_messages
                )
                for bucket in buckets
            ]
            results = [item for future in futures for item in future.result()]
            results.sort(key=lambda r: r[0])

            new: set = set()
            for cid, matched, exact, messages, used in results:
                state.visits[cid] += 1
                state.invocations += used
                state.exact = state.exact and exact
                new |= matched - found
            found = found | frozenset(new)
            promoted_pairs: frozenset = frozenset()
            if pool is not None:
                pool.strip(found)
                for cid, _, _, messages, _ in results:
                    for message in messages:
                        pool.add(message.pairs - found)
                pool.mark_dirty(frozenset(new))
                found, promoted = pool.promote(found)
                promoted_pairs = frozenset().union(frozenset(), *promoted)

            delta = frozenset(new) | promoted_pairs
            active = sorted(neighbor_set(delta, cover)) if delta else []
            sizes = [len(b) for b in buckets]
            even = sum(sizes) / len(sizes) if sizes else 0.0
            stats.append(
                RoundStats(
                    round=round_index,
                    active=len(shuffled),
                    new_matches=len(delta),
                    wall_seconds=time.perf_counter() - start,
                    skew=(max(sizes) / even) if even else 0.0,
                )
            )
            round_index += 1
    state.found = found
    if pool is not None:
        state.pool = pool.snapshot()
    return found, state, stats
