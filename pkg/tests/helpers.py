"""Shared generators for randomized suites: seeded, reproducible, and sized
so exact holistic inference stays cheap."""
from __future__ import annotations

import random

from empass.mln import MlnMatcher, example_rules, learned_rules
from empass.model import Evidence, canonical_pair
from empass.rules import RulesMatcher
from empass.synth import random_cover, random_instance

FIVE_PAIRS = frozenset(
    {("c1", "c2"), ("b1", "b2"), ("a1", "a2"), ("b2", "b3"), ("c2", "c3")}
)


def small_case(rng: random.Random, max_entities: int = 12, max_pairs: int = 12):
    """One random instance plus a random total cover, capped so the holistic
    run stays on the exact inference path."""
    n = rng.randint(4, max_entities)
    instance = random_instance(
        rng,
        entities=n,
        similar_density=rng.uniform(0.15, 0.5),
        coauthor_density=rng.uniform(0.15, 0.5),
        max_pairs=max_pairs,
    )
    cover = random_cover(rng, instance, neighborhoods=rng.randint(2, 5))
    return instance, cover


def iter_cases(seed: int, count: int, **kwargs):
    rng = random.Random(seed)
    for _ in range(count):
        yield small_case(rng, **kwargs)


def random_evidence(rng: random.Random, pairs, p_pos: float = 0.2, p_neg: float = 0.1):
    positive, negative = set(), set()
    for p in sorted(pairs):
        roll = rng.random()
        if roll < p_pos:
            positive.add(p)
        elif roll < p_pos + p_neg:
            negative.add(p)
    return Evidence(frozenset(positive), frozenset(negative))


def fresh_matchers():
    return (
        MlnMatcher(example_rules(), name="mln-example"),
        MlnMatcher(learned_rules(), name="mln"),
        RulesMatcher(),
    )


def all_pairs(instance):
    ids = sorted(instance.entities)
    return [
        canonical_pair(a, b)
        for i, a in enumerate(ids)
        for b in ids[i + 1 :]
    ]
