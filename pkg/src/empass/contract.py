"""Black-box matcher contract, executable axiom checkers, and the registry.

A matcher maps ``(instance, entities, evidence)`` to a match set.  The
output always contains the positive evidence restricted to the entity set
and never touches the negative evidence.  Probabilistic matchers
additionally expose an exact unnormalized log-score, which the maximal
message-passing scheme relies on.

The checkers below turn the well-behavedness axioms (idempotence,
monotonicity, supermodularity) into replayable pass/fail reports.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, runtime_checkable

from .model import (
    Evidence,
    Instance,
    MatchSet,
    NO_EVIDENCE,
    Pair,
    RelationStore,
    ValidationError,
)


@runtime_checkable
class Matcher(Protocol):
    name: str

    def match(
        self,
        instance: Instance,
        entities: Iterable[str],
        evidence: Evidence = ...,
        store: RelationStore | None = ...,
    ) -> MatchSet: ...


@runtime_checkable
class ProbabilisticMatcher(Matcher, Protocol):
    def log_score(self, instance: Instance, matched: frozenset, entities=None): ...

    def candidate_pairs(
        self, instance: Instance, entities: Iterable[str], store=None
    ) -> frozenset: ...


def is_probabilistic(matcher) -> bool:
    return isinstance(matcher, ProbabilisticMatcher)


class MatcherError(RuntimeError):
    """A matcher failed; carries the neighborhood context and partial state."""

    def __init__(self, message, neighborhood=None, partial=None):
        super().__init__(message)
        self.neighborhood = neighborhood
        self.partial = partial


def type2_match(
    matcher, instance: Instance, entities: Iterable[str], evidence: Evidence = NO_EVIDENCE
) -> MatchSet:
    """Match with a probabilistic matcher; rejects deterministic ones."""
    if not is_probabilistic(matcher):
        raise MatcherError(f"matcher {matcher.name!r} exposes no probability model")
    return matcher.match(instance, entities, evidence)


# ---------------------------------------------------------------------------
# Axiom checkers
# ---------------------------------------------------------------------------

@dataclass
class AxiomReport:
    axiom: str
    passed: bool
    detail: str = ""
    counterexample: dict | None = field(default=None)

    def __bool__(self):
        return self.passed


def _report_failure(axiom, detail, **context) -> AxiomReport:
    return AxiomReport(axiom, False, detail, counterexample=context)


def check_idempotence(
    matcher, instance: Instance, entities: Iterable[str], evidence: Evidence = NO_EVIDENCE
) -> AxiomReport:
    """Feeding a matcher its own output as positive evidence must not change
    the output."""
    entities = frozenset(entities)
    first = matcher.match(instance, entities, evidence)
    replay = matcher.match(instance, entities, Evidence(first, evidence.negative))
    if replay == first:
        return AxiomReport("idempotence", True)
    return _report_failure(
        "idempotence",
        "output changed when replayed as evidence",
        entities=sorted(entities),
        evidence=evidence,
        dropped=sorted(first - replay),
        added=sorted(replay - first),
    )


def check_monotonicity(
    matcher,
    instance: Instance,
    base: tuple[Iterable[str], Evidence],
    extended: tuple[Iterable[str], Evidence],
) -> AxiomReport:
    """More entities or positive evidence must never shrink the output;
    more negative evidence must never grow it.

    ``extended`` must dominate ``base``: a superset entity set, superset
    positive evidence and superset negative evidence.  The three clauses are
    checked separately and reported together.
    """
    ents, ev = frozenset(base[0]), base[1]
    ents_big, ev_big = frozenset(extended[0]), extended[1]
    if not (
        ents_big >= ents
        and ev_big.positive >= ev.positive
        and ev_big.negative >= ev.negative
    ):
        raise ValidationError("extended input does not dominate the base input")

    reference = matcher.match(instance, ents, ev)
    clauses = [
        (
            "entities",
            matcher.match(instance, ents_big, Evidence(ev.positive, ev.negative)),
            True,
        ),
        (
            "positive-evidence",
            matcher.match(instance, ents, Evidence(ev_big.positive, ev.negative)),
            True,
        ),
        (
            "negative-evidence",
            matcher.match(instance, ents, Evidence(ev.positive, ev_big.negative)),
            False,
        ),
    ]
    failures = []
    for label, output, expect_superset in clauses:
        bad = (reference - output) if expect_superset else (output - reference)
        if bad:
            failures.append((label, sorted(bad)))
    if not failures:
        return AxiomReport("monotonicity", True)
    return _report_failure(
        "monotonicity",
        "; ".join(f"{label} clause violated on {bad[:3]}" for label, bad in failures),
        base_entities=sorted(ents),
        extended_entities=sorted(ents_big),
        base_evidence=ev,
        extended_evidence=ev_big,
        clauses=[label for label, _ in failures],
    )


def check_supermodularity(
    matcher,
    instance: Instance,
    entities: Iterable[str],
    smaller: frozenset,
    larger: frozenset,
    pair: Pair,
) -> AxiomReport:
    """The marginal log-score gain of a pair must not decrease when the base
    match set grows: gain(larger, p) >= gain(smaller, p) for smaller ⊆ larger.
    Comparisons are exact."""
    if not is_probabilistic(matcher):
        raise MatcherError(f"matcher {matcher.name!r} exposes no probability model")
    if not smaller <= larger:
        raise ValidationError("smaller set must be contained in the larger set")
    entities = frozenset(entities)

    def gain(base):
        return matcher.log_score(instance, base | {pair}, entities) - matcher.log_score(
            instance, base, entities
        )

    gain_small, gain_large = gain(smaller), gain(larger)
    if gain_large >= gain_small:
        return AxiomReport("supermodularity", True)
    return _report_failure(
        "supermodularity",
        f"gain dropped from {gain_small} to {gain_large} as the base grew",
        entities=sorted(entities),
        smaller=sorted(smaller),
        larger=sorted(larger),
        pair=pair,
    )


# ---------------------------------------------------------------------------
# Registry: matchers selectable by name (CLI and plugins)
# ---------------------------------------------------------------------------

_REGISTRY: dict[str, Callable[..., Matcher]] = {}


def register_matcher(name: str, factory: Callable[..., Matcher]) -> None:
    """Register a matcher factory under a CLI-selectable name."""
    _REGISTRY[name] = factory


def create_matcher(name: str, **options) -> Matcher:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise ValidationError(f"unknown matcher {name!r} (known: {known})")
    return factory(**options)


def matcher_names() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def _register_builtins():
    from .mln import MlnMatcher, example_rules, learned_rules
    from .rules import RulesMatcher

    register_matcher(
        "mln", lambda **kw: MlnMatcher(learned_rules(), name="mln", **kw)
    )
    register_matcher(
        "mln-example",
        lambda **kw: MlnMatcher(example_rules(), name="mln-example", **kw),
    )
    register_matcher("rules", lambda **kw: RulesMatcher(**kw))


_register_builtins()
