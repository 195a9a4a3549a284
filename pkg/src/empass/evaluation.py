"""Metrics: precision/recall/F1 against ground truth, soundness and
completeness against a reference run, and the truth-conditioned upper bound.

Every ratio records its denominator; 0/0 is reported as 1.0 with an explicit
flag so degenerate small instances never fail silently.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from .contract import MatcherError, is_probabilistic
from .covering import Cover
from .model import (
    Evidence,
    Instance,
    MatchSet,
    Pair,
    ValidationError,
    canonical_pair,
)


@dataclass(frozen=True)
class GroundTruth:
    """A partition of entity ids into real-world identities."""

    clusters: tuple[frozenset, ...]

    def __post_init__(self):
        seen: set = set()
        for cluster in self.clusters:
            overlap = seen & cluster
            if overlap:
                raise ValidationError(f"clusters overlap on {sorted(overlap)[:3]}")
            seen |= cluster

    @classmethod
    def of(cls, clusters: Iterable[Iterable[str]]) -> "GroundTruth":
        return cls(tuple(frozenset(c) for c in clusters if c))

    def members(self) -> frozenset:
        return frozenset(e for c in self.clusters for e in c)

    def cluster_index(self) -> dict[str, int]:
        return {e: i for i, cluster in enumerate(self.clusters) for e in cluster}

    def true_pairs(self) -> MatchSet:
        pairs = []
        for cluster in self.clusters:
            ordered = sorted(cluster)
            for i, a in enumerate(ordered):
                for b in ordered[i + 1 :]:
                    pairs.append((a, b))
        return frozenset(pairs)


def dumps_truth(truth: GroundTruth) -> str:
    lines = []
    for i, cluster in enumerate(sorted(truth.clusters, key=lambda c: sorted(c))):
        lines.append(
            json.dumps(
                {"cluster": i, "members": sorted(cluster)},
                sort_keys=True,
                separators=(",", ":"),
            )
        )
    return "\n".join(lines) + "\n"


def loads_truth(text: str) -> GroundTruth:
    clusters = []
    for line in text.splitlines():
        line = line.strip()
        if line:
            clusters.append(json.loads(line)["members"])
    return GroundTruth.of(clusters)


def _ratio(num: int, den: int) -> tuple[float, bool]:
    """num/den with the 0/0 -> 1.0 convention; the flag marks degeneracy."""
    if den == 0:
        return 1.0, True
    return num / den, False


def transitive_closure(pairs: MatchSet) -> MatchSet:
    parent: dict[str, str] = {}

    def find(x):
        root = x
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
    groups: dict[str, list[str]] = {}
    for e in parent:
        groups.setdefault(find(e), []).append(e)
    closed = set()
    for group in groups.values():
        group.sort()
        for i, a in enumerate(group):
            for b in group[i + 1 :]:
                closed.add((a, b))
    return frozenset(closed)


@dataclass
class PrfResult:
    precision: float
    recall: float
    f1: float
    correct: int
    predicted: int
    actual: int
    degenerate: tuple[str, ...] = ()


def prf(predicted: MatchSet, truth: GroundTruth, closure: bool = False) -> PrfResult:
    """Pairwise precision/recall/F1.  A predicted pair is correct when both
    entities share a truth cluster; recall is over all intra-cluster pairs."""
    if closure:
        predicted = transitive_closure(predicted)
    index = truth.cluster_index()
    members = truth.members()
    for lo, hi in predicted:
        if lo not in members or hi not in members:
            raise ValidationError(f"predicted pair ({lo}, {hi}) has entities outside the truth")
    correct = sum(1 for lo, hi in predicted if index[lo] == index[hi])
    actual = len(truth.true_pairs())
    precision, p_flag = _ratio(correct, len(predicted))
    recall, r_flag = _ratio(correct, actual)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    degenerate = tuple(
        name for name, flag in (("precision", p_flag), ("recall", r_flag)) if flag
    )
    return PrfResult(precision, recall, f1, correct, len(predicted), actual, degenerate)


@dataclass
class SoundnessResult:
    soundness: float
    completeness: float
    shared: int
    produced: int
    reference: int
    degenerate: tuple[str, ...] = ()


def soundness_completeness(produced: MatchSet, reference: MatchSet) -> SoundnessResult:
    """Fractions of produced matches present in the reference and vice versa."""
    shared = len(produced & reference)
    soundness, s_flag = _ratio(shared, len(produced))
    completeness, c_flag = _ratio(shared, len(reference))
    degenerate = tuple(
        name
        for name, flag in (("soundness", s_flag), ("completeness", c_flag))
        if flag
    )
    return SoundnessResult(
        soundness, completeness, shared, len(produced), len(reference), degenerate
    )


def ub_matches(matcher, instance: Instance, cover: Cover, truth: GroundTruth) -> MatchSet:
    """Upper bound on the holistic output via truth conditioning.

    For every candidate pair, the matcher runs on the pair's smallest
    containing neighborhood with every *other* true pair given as positive
    evidence; the pair is kept if the matcher then matches it.  For
    supermodular matchers the union bounds the holistic output from above.
    Evaluated per neighborhood for tractability; since matchers are monotone
    in the entity set, this is itself a lower bound on the whole-instance
    conditioning.
    """
    if not is_probabilistic(matcher):
        raise MatcherError("the upper-bound scheme needs a probabilistic matcher")
    smallest: dict[Pair, tuple[int, int]] = {}
    for nbhd in cover:
        for pair in matcher.candidate_pairs(instance, nbhd.members, nbhd.induced):
            size_id = (nbhd.size, nbhd.index)
            if pair not in smallest or size_id < smallest[pair]:
                smallest[pair] = size_id
    true_pairs = truth.true_pairs()
    by_neighborhood: dict[int, list[Pair]] = {}
    for pair, (_, cid) in smallest.items():
        by_neighborhood.setdefault(cid, []).append(pair)
    kept = []
    for cid in sorted(by_neighborhood):
        nbhd = cover.neighborhoods[cid]
        for pair in sorted(by_neighborhood[cid]):
            evidence = Evidence(true_pairs - {pair})
            output = matcher.match(instance, nbhd.members, evidence, nbhd.induced)
            if pair in output:
                kept.append(pair)
    return frozenset(kept)


@dataclass
class MetricsReport:
    scheme: str
    matcher: str
    prf_result: PrfResult | None = None
    framework: SoundnessResult | None = None
    reference_name: str = ""
    notes: tuple[str, ...] = ()
    counters: dict = field(default_factory=dict)

    CSV_HEADER = (
        "scheme,matcher,precision,recall,f1,correct,predicted,actual,"
        "soundness,completeness,reference,degenerate"
    )

    def csv_row(self) -> str:
        p = self.prf_result
        s = self.framework
        degenerate = ";".join(
            (p.degenerate if p else ()) + (s.degenerate if s else ())
        )
        cells = [
            self.scheme,
            self.matcher,
            f"{p.precision:.6f}" if p else "",
            f"{p.recall:.6f}" if p else "",
            f"{p.f1:.6f}" if p else "",
            str(p.correct) if p else "",
            str(p.predicted) if p else "",
            str(p.actual) if p else "",
            f"{s.soundness:.6f}" if s else "",
            f"{s.completeness:.6f}" if s else "",
            self.reference_name,
            degenerate,
        ]
        return ",".join(cells)

    def pretty(self) -> str:
        lines = [f"scheme={self.scheme} matcher={self.matcher}"]
        if self.prf_result:
            p = self.prf_result
            lines.append(
                f"  precision={p.precision:.4f} recall={p.recall:.4f} f1={p.f1:.4f}"
                f" (correct={p.correct} predicted={p.predicted} actual={p.actual})"
            )
            if p.degenerate:
                lines.append(f"  degenerate ratios: {', '.join(p.degenerate)}")
        if self.framework:
            s = self.framework
            lines.append(
                f"  soundness={s.soundness:.4f} completeness={s.completeness:.4f}"
                f" vs {self.reference_name or 'reference'}"
                f" (shared={s.shared} produced={s.produced} reference={s.reference})"
            )
            if s.degenerate:
                lines.append(f"  degenerate ratios: {', '.join(s.degenerate)}")
        for note in self.notes:
            lines.append(f"  note: {note}")
        for key in sorted(self.counters):
            lines.append(f"  {key}={self.counters[key]}")
        return "\n".join(lines)
