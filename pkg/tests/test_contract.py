import itertools
import random

import pytest

from empass.contract import (
    MatcherError,
    check_idempotence,
    check_monotonicity,
    check_supermodularity,
    create_matcher,
    is_probabilistic,
    matcher_names,
    register_matcher,
    type2_match,
)
from empass.model import Evidence, ValidationError

from helpers import fresh_matchers, iter_cases, random_evidence


class _DroppingMatcher:
    """Adversarial mock: forgets one pair whenever it is given evidence."""

    name = "dropper"

    def __init__(self, inner):
        self.inner = inner

    def match(self, instance, entities, evidence=Evidence(), store=None):
        out = self.inner.match(instance, entities, evidence, store)
        if evidence.positive and out:
            return out - {max(out)}
        return out


class _GrowingMatcher:
    """Adversarial mock: loses a specific pair once entities are added."""

    name = "shrinker"

    def __init__(self, inner, victim):
        self.inner = inner
        self.victim = victim

    def match(self, instance, entities, evidence=Evidence(), store=None):
        out = self.inner.match(instance, entities, evidence, store)
        if len(frozenset(entities)) == len(instance.entities):
            return out - {self.victim}
        return out


def test_empty_entity_set_matches_nothing(mln_example, example_instance):
    assert mln_example.match(example_instance, frozenset()) == frozenset()


def test_registry_knows_builtins():
    assert {"mln", "mln-example", "rules"} <= set(matcher_names())
    assert create_matcher("rules").name == "rules"
    with pytest.raises(ValidationError):
        create_matcher("nope")


def test_registry_accepts_plugins(rules_matcher):
    register_matcher("rules-again", lambda **kw: rules_matcher)
    assert create_matcher("rules-again") is rules_matcher


def test_type2_match_rejects_deterministic(rules_matcher, example_instance):
    assert not is_probabilistic(rules_matcher)
    with pytest.raises(MatcherError):
        type2_match(rules_matcher, example_instance, example_instance.ids())


def test_type2_match_delegates_for_probabilistic(mln_example, example_instance):
    assert is_probabilistic(mln_example)
    out = type2_match(mln_example, example_instance, example_instance.ids())
    assert out == mln_example.match(example_instance, example_instance.ids())


class TestIdempotence:
    def test_builtins_pass_everywhere(self):
        rng = random.Random(31)
        matchers = fresh_matchers()
        for instance, _ in iter_cases(31, 25):
            ids = sorted(instance.entities)
            for matcher in matchers:
                ev = random_evidence(rng, matcher_universe(matcher, instance))
                report = check_idempotence(matcher, instance, ids, ev)
                assert report, report.detail

    def test_adversarial_mock_fails_with_counterexample(
        self, mln_example, example_instance
    ):
        mock = _DroppingMatcher(mln_example)
        report = check_idempotence(mock, example_instance, example_instance.ids())
        assert not report
        assert report.counterexample["dropped"]


class TestMonotonicity:
    def test_example_matcher_grows_with_the_entity_set(
        self, mln_example, example_instance, example_cover
    ):
        base = example_cover.neighborhoods[1].members
        extended = base | example_cover.neighborhoods[2].members
        report = check_monotonicity(
            mln_example,
            example_instance,
            (base, Evidence()),
            (extended, Evidence()),
        )
        assert report, report.detail

    def test_reflexive_pair_always_passes(self, mln_learned, example_instance):
        ids = example_instance.ids()
        ev = Evidence.of([("a1", "a2")])
        report = check_monotonicity(
            mln_learned, example_instance, (ids, ev), (ids, ev)
        )
        assert report

    def test_dominance_precondition_enforced(self, mln_example, example_instance):
        with pytest.raises(ValidationError):
            check_monotonicity(
                mln_example,
                example_instance,
                (example_instance.ids(), Evidence()),
                (frozenset({"a1"}), Evidence()),
            )

    def test_adversarial_mock_fails(self, mln_example, example_instance):
        mock = _GrowingMatcher(mln_example, victim=("c1", "c2"))
        report = check_monotonicity(
            mock,
            example_instance,
            (frozenset({"c1", "c2", "d1"}), Evidence()),
            (example_instance.ids(), Evidence()),
        )
        assert not report
        assert "entities" in report.counterexample["clauses"]


def matcher_universe(matcher, instance):
    if is_probabilistic(matcher):
        return matcher.candidate_pairs(instance, instance.ids())
    return frozenset()


class TestSupermodularity:
    def test_equal_sets_pass_with_equality(self, mln_example, example_instance):
        base = frozenset({("c1", "c2")})
        report = check_supermodularity(
            mln_example, example_instance, example_instance.ids(),
            base, base, ("b1", "b2"),
        )
        assert report

    def test_existing_pair_has_zero_gain_on_both_sides(
        self, mln_example, example_instance
    ):
        pair = ("c1", "c2")
        small = frozenset({pair})
        large = small | {("b1", "b2")}
        report = check_supermodularity(
            mln_example, example_instance, example_instance.ids(), small, large, pair
        )
        assert report

    def test_deterministic_matcher_rejected(self, rules_matcher, example_instance):
        with pytest.raises(MatcherError):
            check_supermodularity(
                rules_matcher, example_instance, example_instance.ids(),
                frozenset(), frozenset(), ("a1", "a2"),
            )

    def test_exhaustive_on_tiny_instances(self, mln_learned):
        # quantified over added pairs outside T - S: for p in T - S the ratio
        # inequality is vacuously broken by any matcher that ever strictly
        # gains from a pair (left side is 1), which is not the property the
        # soundness results rely on
        for instance, _ in iter_cases(41, 8, max_entities=5, max_pairs=4):
            ids = sorted(instance.entities)
            universe = sorted(mln_learned.candidate_pairs(instance, ids))
            if len(universe) > 5:
                continue
            for smaller_bits in range(1 << len(universe)):
                smaller = frozenset(
                    universe[i] for i in range(len(universe)) if smaller_bits >> i & 1
                )
                for larger_bits in range(1 << len(universe)):
                    if smaller_bits & larger_bits != smaller_bits:
                        continue
                    larger = frozenset(
                        universe[i] for i in range(len(universe)) if larger_bits >> i & 1
                    )
                    for pair in universe:
                        if pair in larger and pair not in smaller:
                            continue
                        report = check_supermodularity(
                            mln_learned, instance, ids, smaller, larger, pair
                        )
                        assert report, report.detail
