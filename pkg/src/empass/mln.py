"""Weighted-rule probabilistic matcher.

Rules have the shape ``weight :: body => match(x, y)`` where body atoms range
over ``similar(x, y[, level])``, ``coauthor(x, y)`` and at most one
``match(u, v)`` atom.  Grounding a rule substitutes entities for variables so
that every similar/coauthor atom matches a stored relation tuple literally
(symmetric relations are stored once, in canonical order, and that stored
orientation is what grounding sees).  A grounding *fires* under a match set S
when its head pair is in S and its body match pair (if any) is in S or is
reflexive.  The score of S is the total weight of firing groundings; the
matcher returns the highest-scoring set, preferring larger sets and then the
lexicographically least pair sequence on ties.

Scores are exact rationals throughout, so score comparisons and tie
detection never hit floating-point noise.
"""
from __future__ import annotations

import math
import re
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .model import (
    EMPTY_MATCHES,
    Evidence,
    Instance,
    MatchSet,
    NO_EVIDENCE,
    Pair,
    RelationStore,
    ValidationError,
    canonical_pair,
    restrict_pairs,
)

_RELATION_NAMES = {"similar": "Similar", "coauthor": "Coauthor"}


@dataclass(frozen=True)
class Atom:
    pred: str
    vars: tuple[str, ...]
    level: int | None = None

    def __str__(self):
        args = list(self.vars)
        if self.level is not None:
            args.append(str(self.level))
        return f"{self.pred}({', '.join(args)})"


@dataclass(frozen=True)
class WeightedRule:
    weight: Fraction
    relational: tuple[Atom, ...]
    match_body: Atom | None
    head: Atom

    def __str__(self):
        body = " & ".join(
            str(a) for a in (*self.relational, *([self.match_body] if self.match_body else []))
        )
        return f"{self.weight} :: {body} => {self.head}"


@dataclass(frozen=True)
class RuleSet:
    name: str
    rules: tuple[WeightedRule, ...]


_ATOM_RE = re.compile(r"^([A-Za-z_]\w*)\s*\(([^()]*)\)$")


def _parse_atom(text: str) -> Atom:
    m = _ATOM_RE.match(text.strip())
    if not m:
        raise ValidationError(f"cannot parse atom {text!r}")
    pred = m.group(1).lower()
    args = [a.strip() for a in m.group(2).split(",") if a.strip()]
    level = None
    if pred == "similar":
        if len(args) == 3:
            try:
                level = int(args[2])
            except ValueError:
                raise ValidationError(f"similar level must be an integer: {text!r}")
            args = args[:2]
        if len(args) != 2:
            raise ValidationError(f"similar takes 2 or 3 arguments: {text!r}")
    elif pred in ("coauthor", "match"):
        if len(args) != 2:
            raise ValidationError(f"{pred} takes 2 arguments: {text!r}")
    else:
        raise ValidationError(f"unknown predicate {pred!r} in {text!r}")
    for a in args:
        if not re.match(r"^[A-Za-z_]\w*$", a):
            raise ValidationError(f"rule arguments must be variables: {text!r}")
    return Atom(pred, tuple(args), level)


def parse_rules(text: str, name: str = "custom") -> RuleSet:
    """Parse the one-rule-per-line format ``weight :: atoms => match(x, y)``.

    Blank lines and ``#`` comments are skipped.  At most one match atom may
    appear in a body, and every head or body-match variable must be bound by
    a similar/coauthor atom.
    """
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            weight_part, rest = line.split("::", 1)
            body_part, head_part = rest.split("=>", 1)
        except ValueError:
            raise ValidationError(f"rule line {lineno}: expected 'weight :: body => head'")
        try:
            weight = Fraction(weight_part.strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"rule line {lineno}: bad weight {weight_part.strip()!r}")
        head = _parse_atom(head_part)
        if head.pred != "match":
            raise ValidationError(f"rule line {lineno}: head must be a match atom")
        relational: list[Atom] = []
        match_body: Atom | None = None
        for text_atom in body_part.split("&"):
            atom = _parse_atom(text_atom)
            if atom.pred == "match":
                if match_body is not None:
                    raise ValidationError(
                        f"rule line {lineno}: at most one match atom may appear in a body"
                    )
                match_body = atom
            else:
                relational.append(atom)
        bound = {v for atom in relational for v in atom.vars}
        needed = set(head.vars) | (set(match_body.vars) if match_body else set())
        unbound = needed - bound
        if unbound:
            raise ValidationError(
                f"rule line {lineno}: variables {sorted(unbound)} not bound by a relational atom"
            )
        rules.append(WeightedRule(weight, tuple(relational), match_body, head))
    if not rules:
        raise ValidationError("rule set is empty")
    return RuleSet(name, tuple(rules))


#: Didactic two-rule configuration: similarity alone is weak negative
#: evidence, a matched coauthor pair is strong positive evidence.
EXAMPLE_RULES_TEXT = """\
-5 :: similar(x, y) => match(x, y)
8 :: similar(x, y) & coauthor(x, u) & coauthor(y, v) & match(u, v) => match(x, y)
"""

#: Production weights for the bibliographic domain.
LEARNED_RULES_TEXT = """\
-2.28 :: similar(x, y, 1) => match(x, y)
-3.84 :: similar(x, y, 2) => match(x, y)
12.75 :: similar(x, y, 3) => match(x, y)
2.46 :: coauthor(x, u) & coauthor(y, v) & match(u, v) => match(x, y)
"""


def example_rules() -> RuleSet:
    return parse_rules(EXAMPLE_RULES_TEXT, "example")


def learned_rules() -> RuleSet:
    return parse_rules(LEARNED_RULES_TEXT, "learned")


# ---------------------------------------------------------------------------
# Grounding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grounding:
    """One substitution of a rule whose relational body atoms all hold.

    ``body`` is the match pair required by the body, or None when the body
    has no match atom or it grounded reflexively (hard true either way).
    """

    rule_index: int
    head: Pair
    body: Pair | None
    weight: Fraction
    bindings: tuple[tuple[str, str], ...]


class _TupleIndex:
    """Per-store index of relation tuples by bound argument position."""

    def __init__(self, store: RelationStore):
        self.store = store
        self._by_pos: dict = {}

    def candidates(self, atom: Atom, bindings: dict) -> Iterable[tuple]:
        relation = _RELATION_NAMES[atom.pred]
        tuples = self.store.tuples(relation)
        if atom.pred == "similar" and atom.level is not None:
            tuples = self._leveled(relation, atom.level)
        for pos, var in enumerate(atom.vars):
            if var in bindings:
                return self._indexed(relation, atom.level, pos).get(bindings[var], ())
        return tuples

    def _leveled(self, relation: str, level: int) -> frozenset:
        key = (relation, level, None)
        if key not in self._by_pos:
            self._by_pos[key] = frozenset(
                t for t in self.store.tuples(relation) if self.store.level_of(t) == level
            )
        return self._by_pos[key]

    def _indexed(self, relation: str, level: int | None, pos: int) -> dict:
        key = (relation, level, pos)
        if key not in self._by_pos:
            tuples = (
                self._leveled(relation, level)
                if level is not None
                else self.store.tuples(relation)
            )
            index: dict = {}
            for t in tuples:
                index.setdefault(t[pos], []).append(t)
            self._by_pos[key] = index
        return self._by_pos[key]


def _unify(atom: Atom, tup: tuple, bindings: dict) -> dict | None:
    new = bindings
    for var, value in zip(atom.vars, tup):
        bound = new.get(var)
        if bound is None:
            if new is bindings:
                new = dict(bindings)
            new[var] = value
        elif bound != value:
            return None
    return new


def _enumerate_bindings(
    atoms: Sequence[Atom], index: _TupleIndex, bindings: dict
) -> Iterator[dict]:
    if not atoms:
        yield bindings
        return
    atom = atoms[0]
    for tup in index.candidates(atom, bindings):
        unified = _unify(atom, tup, bindings)
        if unified is not None:
            yield from _enumerate_bindings(atoms[1:], index, unified)


def _grounding_from(rule_index: int, rule: WeightedRule, bindings: dict) -> Grounding | None:
    hx, hy = (bindings[v] for v in rule.head.vars)
    if hx == hy:
        return None  # reflexive matches are implicit, never scored
    body = None
    if rule.match_body is not None:
        bu, bv = (bindings[v] for v in rule.match_body.vars)
        if bu != bv:
            body = canonical_pair(bu, bv)
    return Grounding(
        rule_index,
        canonical_pair(hx, hy),
        body,
        rule.weight,
        tuple(sorted(bindings.items())),
    )


def ground(
    ruleset: RuleSet,
    store: RelationStore,
    head_pairs: frozenset | None = None,
    body_pairs: frozenset | None = None,
) -> tuple[Grounding, ...]:
    """All groundings of ``ruleset`` over the tuples of ``store``.

    ``head_pairs`` restricts output (and drives enumeration) to groundings
    whose head lies in the given pair universe; ``body_pairs`` drops
    groundings whose body match pair falls outside the universe and so can
    never fire.  Both filters preserve scores for any match set within the
    universe.
    """
    index = _TupleIndex(store)
    seen: dict = {}
    for rule_index, rule in enumerate(ruleset.rules):
        if head_pairs is None:
            bindings_iter = _enumerate_bindings(rule.relational, index, {})
        else:
            bindings_iter = _seeded_bindings(rule, index, head_pairs)
        for bindings in bindings_iter:
            g = _grounding_from(rule_index, rule, bindings)
            if g is None:
                continue
            if head_pairs is not None and g.head not in head_pairs:
                continue
            if body_pairs is not None and g.body is not None and g.body not in body_pairs:
                continue
            seen.setdefault((g.rule_index, g.bindings), g)
    return tuple(seen[k] for k in sorted(seen))


def _seeded_bindings(
    rule: WeightedRule, index: _TupleIndex, head_pairs: frozenset
) -> Iterator[dict]:
    hx, hy = rule.head.vars
    for lo, hi in sorted(head_pairs):
        for a, b in ((lo, hi), (hi, lo)):
            yield from _enumerate_bindings(rule.relational, index, {hx: a, hy: b})


def log_score(groundings: Iterable[Grounding], matched: frozenset) -> Fraction:
    """Total weight of groundings that fire under ``matched``.  Exact."""
    total = Fraction(0)
    for g in groundings:
        if g.head in matched and (g.body is None or g.body in matched):
            total += g.weight
    return total


# ---------------------------------------------------------------------------
# MAP inference
# ---------------------------------------------------------------------------

class InferenceError(RuntimeError):
    """Inference could not produce a trustworthy result."""


def _weight_scale(groundings: Sequence[Grounding]) -> int:
    scale = 1
    for g in groundings:
        scale = math.lcm(scale, g.weight.denominator)
    return scale


class NeighborhoodModel:
    """Groundings of a rule set over one entity subset, ready for inference."""

    def __init__(
        self,
        ruleset: RuleSet,
        members: frozenset,
        store: RelationStore,
        exact_cap: int = 20,
    ):
        self.members = members
        self.exact_cap = exact_cap
        self.groundings = ground(ruleset, store)
        self.heads = frozenset(g.head for g in self.groundings)
        self._scale = _weight_scale(self.groundings)

    def candidate_pairs(self) -> frozenset:
        """Pairs that can ever be matched: heads of at least one grounding."""
        return self.heads

    def score(self, matched: frozenset) -> Fraction:
        return log_score(self.groundings, matched)

    def infer(self, evidence: Evidence = NO_EVIDENCE) -> tuple[MatchSet, bool]:
        """Highest-scoring match set honoring the evidence.

        Returns ``(match_set, exact)`` where ``exact`` is False when a
        greedy fallback decided any part of the answer.  Positive evidence
        restricted to the member set is always included; negative evidence
        never appears.
        """
        pins = restrict_pairs(evidence.positive, self.members)
        banned = evidence.negative
        if pins & banned:
            raise InferenceError("evidence is contradictory")
        free = sorted(self.heads - pins - banned)
        position = {p: i for i, p in enumerate(free)}

        lin = [0] * len(free)
        quad: dict[tuple[int, int], int] = {}
        for g in self.groundings:
            if g.head in banned:
                continue
            if g.body is None or g.body in pins:
                body_free = False  # body already satisfied
            elif g.body in position:
                body_free = True
            else:
                continue  # body can never be matched: grounding is dead
            w = int(g.weight * self._scale)
            if g.head in pins:
                if body_free:
                    lin[position[g.body]] += w
                # else: constant term, irrelevant to argmax
                continue
            i = position[g.head]
            if not body_free:
                lin[i] += w
            else:
                j = position[g.body]
                key = (i, j) if i < j else (j, i)
                quad[key] = quad.get(key, 0) + w

        exact = True
        chosen: set[Pair] = set(pins)
        for component in _components(len(free), quad):
            comp_lin = [lin[i] for i in component]
            local = {g: li for li, g in enumerate(component)}
            comp_quad = [
                (local[i], local[j], w)
                for (i, j), w in quad.items()
                if i in local and j in local
            ]
            if len(component) <= self.exact_cap:
                selected = _solve_exact(len(component), comp_lin, comp_quad)
            else:
                selected = _solve_greedy(len(component), comp_lin, comp_quad)
                exact = False
            chosen.update(free[component[li]] for li in selected)
        return frozenset(chosen), exact


def _components(n: int, quad: dict) -> list[list[int]]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in quad:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [sorted(g) for g in sorted(groups.values())]


def _solve_exact(n: int, lin: list[int], quad: list[tuple[int, int, int]]) -> list[int]:
    """Argmax over all subsets of ``n`` variables of a quadratic pseudo-boolean
    score; ties prefer larger subsets, then the lexicographically least index
    sequence."""
    if n >= 14:
        return _solve_exact_vectorized(n, lin, quad)
    best_score = None
    best_size = -1
    total = 1 << n
    scores = [0] * total
    for mask in range(total):
        s = 0
        m = mask
        while m:
            low = m & -m
            s += lin[low.bit_length() - 1]
            m ^= low
        for i, j, w in quad:
            if mask >> i & 1 and mask >> j & 1:
                s += w
        scores[mask] = s
        size = mask.bit_count()
        if best_score is None or s > best_score or (s == best_score and size > best_size):
            best_score, best_size = s, size
    ties = [
        mask
        for mask in range(total)
        if scores[mask] == best_score and mask.bit_count() == best_size
    ]
    return _lex_least(ties, n)


def _solve_exact_vectorized(n: int, lin: list[int], quad) -> list[int]:
    masks = np.arange(1 << n, dtype=np.int64)
    bits = [(masks >> i & 1).astype(np.int8) for i in range(n)]
    score = np.zeros(1 << n, dtype=np.int64)
    for i, w in enumerate(lin):
        if w:
            score += w * bits[i].astype(np.int64)
    for i, j, w in quad:
        score += w * (bits[i] & bits[j]).astype(np.int64)
    best = score.max()
    cand = np.flatnonzero(score == best)
    if len(cand) > 1:
        pop = np.zeros(len(cand), dtype=np.int64)
        for i in range(n):
            pop += bits[i][cand]
        cand = cand[pop == pop.max()]
    return _lex_least([int(m) for m in cand], n)


def _lex_least(masks: list[int], n: int) -> list[int]:
    def indices(mask):
        return [i for i in range(n) if mask >> i & 1]

    return indices(min(masks, key=indices)) if len(masks) > 1 else indices(masks[0])


def _solve_greedy(n: int, lin: list[int], quad) -> list[int]:
    """Monotone greedy fixpoint for oversized components: repeatedly apply
    the best strictly-improving move among single variables, grounding pairs,
    and the full remainder."""
    adjacency: dict[int, list[tuple[int, int]]] = {}
    for i, j, w in quad:
        adjacency.setdefault(i, []).append((j, w))
        adjacency.setdefault(j, []).append((i, w))

    selected: set[int] = set()

    def gain(addition: set[int]) -> int:
        s = sum(lin[i] for i in addition)
        seen = set()
        for i in addition:
            for j, w in adjacency.get(i, ()):
                key = (min(i, j), max(i, j))
                if key in seen:
                    continue
                seen.add(key)
                if (j in selected or j in addition) and not (i in selected and j in selected):
                    s += w
        return s

    while True:
        moves: list[set[int]] = [{i} for i in range(n) if i not in selected]
        moves.extend(
            {i, j}
            for i, j, _ in quad
            if not ({i, j} <= selected) and ({i, j} - selected)
        )
        remainder = set(range(n)) - selected
        if remainder:
            moves.append(remainder)
        best_move, best_gain = None, 0
        for move in moves:
            move = move - selected
            if not move:
                continue
            g = gain(move)
            if g > best_gain or (
                g == best_gain and g > 0 and best_move is not None and sorted(move) < sorted(best_move)
            ):
                best_move, best_gain = move, g
        if best_move is None or best_gain <= 0:
            return sorted(selected)
        selected |= best_move


def map_infer(
    groundings: Sequence[Grounding],
    evidence: Evidence,
    pairs: Iterable[Pair],
    exact_cap: int = 20,
) -> MatchSet:
    """MAP inference over an explicit candidate pair set.

    Thin wrapper over the model machinery for callers that already hold
    groundings; the matcher interface below is the usual entry point.
    """
    model = NeighborhoodModel.__new__(NeighborhoodModel)
    model.members = frozenset(e for p in pairs for e in p) | frozenset(
        e for p in evidence.positive for e in p
    )
    model.exact_cap = exact_cap
    model.groundings = tuple(groundings)
    model.heads = frozenset(pairs)
    model._scale = _weight_scale(model.groundings)
    matched, _ = model.infer(evidence)
    return matched


# ---------------------------------------------------------------------------
# Corpus-scale scoring for message promotion
# ---------------------------------------------------------------------------

class GlobalScorer:
    """Exact score deltas over the whole instance, restricted to a pair
    universe that the framework can ever decide.

    ``gain(base, added)`` is ``log_score(base | added) - log_score(base)``
    computed from the groundings touching ``added`` only, so promotion checks
    stay cheap on large corpora.
    """

    def __init__(self, ruleset: RuleSet, instance: Instance, universe: frozenset):
        self.universe = universe
        self.groundings = ground(
            ruleset, instance.store, head_pairs=universe, body_pairs=universe
        )
        self._by_head: dict[Pair, list[Grounding]] = {}
        self._by_body: dict[Pair, list[Grounding]] = {}
        for g in self.groundings:
            self._by_head.setdefault(g.head, []).append(g)
            if g.body is not None:
                self._by_body.setdefault(g.body, []).append(g)

    def log_score(self, matched: frozenset) -> Fraction:
        return log_score(self.groundings, matched)

    def gain(self, base: frozenset, added: frozenset) -> Fraction:
        added = added - base
        total = Fraction(0)
        for p in added:
            for g in self._by_head.get(p, ()):
                if g.body is None or g.body in base or g.body in added:
                    total += g.weight
            for g in self._by_body.get(p, ()):
                if g.head in base:
                    total += g.weight
        return total

    def relevant_pairs(self, pairs: frozenset) -> frozenset:
        """Pairs whose membership in the base set can change the gain of a
        message over ``pairs``; used to skip unaffected promotion rechecks."""
        out = set()
        for p in pairs:
            for g in self._by_head.get(p, ()):
                if g.body is not None:
                    out.add(g.body)
            for g in self._by_body.get(p, ()):
                out.add(g.head)
        return frozenset(out)


# ---------------------------------------------------------------------------
# The matcher
# ---------------------------------------------------------------------------

class MlnMatcher:
    """Probabilistic weighted-rule matcher.

    Stateless between calls: results depend only on the arguments.  A
    per-instance grounding cache makes repeated runs on the same
    neighborhood cheap; it never changes results.
    """

    def __init__(self, ruleset: RuleSet | None = None, name: str | None = None,
                 exact_cap: int = 20):
        self.ruleset = ruleset if ruleset is not None else learned_rules()
        self.name = name or f"mln-{self.ruleset.name}"
        self.exact_cap = exact_cap
        self._models: "weakref.WeakKeyDictionary[Instance, dict]" = (
            weakref.WeakKeyDictionary()
        )

    def model(
        self, instance: Instance, entities: Iterable[str], store: RelationStore | None = None
    ) -> NeighborhoodModel:
        members = frozenset(entities)
        cache = self._models.setdefault(instance, {})
        model = cache.get(members)
        if model is None:
            induced = store if store is not None else instance.induced(members)
            model = NeighborhoodModel(self.ruleset, members, induced, self.exact_cap)
            if len(cache) > 100_000:
                cache.clear()
            cache[members] = model
        return model

    def match_detailed(
        self,
        instance: Instance,
        entities: Iterable[str],
        evidence: Evidence = NO_EVIDENCE,
        store: RelationStore | None = None,
    ) -> tuple[MatchSet, bool]:
        return self.model(instance, entities, store).infer(evidence)

    def match(
        self,
        instance: Instance,
        entities: Iterable[str],
        evidence: Evidence = NO_EVIDENCE,
        store: RelationStore | None = None,
    ) -> MatchSet:
        matched, _ = self.match_detailed(instance, entities, evidence, store)
        return matched

    def candidate_pairs(
        self,
        instance: Instance,
        entities: Iterable[str],
        store: RelationStore | None = None,
    ) -> frozenset:
        return self.model(instance, entities, store).candidate_pairs()

    def log_score(
        self,
        instance: Instance,
        matched: frozenset,
        entities: Iterable[str] | None = None,
    ) -> Fraction:
        """Unnormalized log-probability of a match set over ``entities``
        (the whole instance by default).  Use :meth:`scorer` when many
        scores over a large instance are needed."""
        members = instance.ids() if entities is None else frozenset(entities)
        return self.model(instance, members).score(matched)

    def scorer(self, instance: Instance, universe: frozenset) -> GlobalScorer:
        return GlobalScorer(self.ruleset, instance, universe)
