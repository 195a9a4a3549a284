"""Command-line driver: generate corpora, build covers, run schemes, evaluate.

Exit codes: 0 success, 2 validation failure (bad inputs, failed axiom
checks), 1 internal error.
"""
from __future__ import annotations

import argparse
import random
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .contract import (
    MatcherError,
    check_idempotence,
    check_monotonicity,
    check_supermodularity,
    create_matcher,
    is_probabilistic,
    matcher_names,
)
from .covering import Cover, canopy_cover, dumps_cover, loads_cover, make_total, verify_total
from .datasets import load_ruleset
from .evaluation import (
    GroundTruth,
    MetricsReport,
    dumps_truth,
    loads_truth,
    prf,
    soundness_completeness,
    ub_matches,
)
from .mln import MlnMatcher
from .model import (
    Evidence,
    Instance,
    ValidationError,
    dump_matches,
    dumps_instance,
    load_matches,
    loads_instance,
)
from .parallel import run_parallel
from .passing import mmp, no_mp, smp
from .similarity import build_similar_tuples
from .synth import GenConfig, generate, random_cover, random_instance


def _read(path) -> str:
    return Path(path).read_text("utf-8")


def _write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, "utf-8")


def _load_config(path) -> dict:
    """Parse a key=value config file; values are typed as int, float, bool
    or string."""
    options: dict = {}
    for lineno, raw in enumerate(_read(path).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        for caster in (int, float):
            try:
                options[key] = caster(value)
                break
            except ValueError:
                continue
        else:
            if value.lower() in ("true", "false"):
                options[key] = value.lower() == "true"
            else:
                options[key] = value
    return options


def _make_matcher(args) -> object:
    options = {}
    if getattr(args, "rules", None):
        return MlnMatcher(load_ruleset(args.rules), name=f"mln-{Path(args.rules).stem}")
    return create_matcher(args.matcher, **options)


def _prepare_cover(instance: Instance, args) -> tuple[Instance, Cover]:
    if not instance.store.tuples("Similar"):
        instance = build_similar_tuples(instance)
    if getattr(args, "cover", None):
        cover = loads_cover(_read(args.cover), instance)
    else:
        cover = canopy_cover(instance, args.loose, args.tight)
    cover = make_total(cover, instance)
    uncovered = instance.ids() - cover.covered()
    if uncovered:
        raise ValidationError(
            f"{len(uncovered)} entities remain outside every neighborhood"
        )
    return instance, cover


@dataclass
class PipelineResult:
    scheme: str
    matches: frozenset
    reports: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    round_stats: list = field(default_factory=list)


def run_pipeline(
    instance: Instance,
    matcher,
    scheme: str = "mmp",
    loose: float = 0.75,
    tight: float = 0.9,
    cover: Cover | None = None,
    workers: int = 1,
    seed: int = 0,
    truth: GroundTruth | None = None,
) -> PipelineResult:
    """Build similarity tuples and a total cover, run a scheme, and score."""
    if not instance.store.tuples("Similar"):
        instance = build_similar_tuples(instance)
    if cover is None:
        cover = make_total(canopy_cover(instance, loose, tight), instance)
    elif cover.total is None:
        ok, missing = verify_total(cover, instance.store)
        cover.total = ok
        if not ok:
            warnings.warn(
                f"cover is not total: {len(missing)} tuples outside every "
                "neighborhood never contribute evidence",
                stacklevel=2,
            )
    scheme = scheme.lower()
    round_stats = []
    if workers > 1 and scheme in ("smp", "mmp"):
        matches, state, round_stats = run_parallel(
            matcher, instance, cover, workers=workers, scheme=scheme, seed=seed
        )
    elif scheme == "no-mp":
        matches, state = no_mp(matcher, instance, cover)
    elif scheme == "smp":
        matches, state = smp(matcher, instance, cover)
    elif scheme == "mmp":
        matches, state = mmp(matcher, instance, cover)
    else:
        raise ValidationError(f"unknown scheme {scheme!r}")
    result = PipelineResult(scheme, matches)
    result.round_stats = round_stats
    result.counters = {
        "neighborhoods": len(cover),
        "max_neighborhood": cover.max_size(),
        "matcher_invocations": state.invocations,
        "max_visits": max(state.visits.values(), default=0),
        "exact_inference": state.exact,
    }
    report = MetricsReport(scheme, matcher.name, counters=result.counters)
    if truth is not None:
        report.prf_result = prf(matches, truth)
    result.reports.append(report)
    return result


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_generate(args) -> int:
    config = GenConfig(
        authors=args.authors,
        papers_per_author=args.papers_per_author,
        max_coauthors=args.max_coauthors,
        mutation_prob=args.mutation,
        cites_per_paper=args.cites,
        seed=args.seed,
    )
    instance, truth = generate(config)
    out = Path(args.out)
    _write(out / "instance.jsonl", dumps_instance(instance))
    _write(out / "truth.jsonl", dumps_truth(truth))
    print(
        f"wrote {len(instance.entities)} entities, "
        f"{instance.store.count()} tuples, {len(truth.clusters)} clusters to {out}"
    )
    return 0


def _cmd_cover(args) -> int:
    instance = loads_instance(_read(args.instance))
    instance, cover = _prepare_cover(instance, args)
    ok, missing = verify_total(cover, instance.store)
    _write(Path(args.out) / "cover.jsonl", dumps_cover(cover))
    histogram = cover.size_histogram()
    print(
        f"{len(cover)} neighborhoods, max size {cover.max_size()}, "
        f"total={ok} (missing {len(missing)}), sizes {histogram}"
    )
    return 0


def _cmd_run(args) -> int:
    instance = loads_instance(_read(args.instance))
    truth = loads_truth(_read(args.truth)) if args.truth else None
    matcher = _make_matcher(args)
    instance, cover = _prepare_cover(instance, args)
    result = run_pipeline(
        instance,
        matcher,
        scheme=args.scheme,
        cover=cover,
        workers=args.workers,
        seed=args.seed,
        truth=truth,
    )
    out = Path(args.out)
    _write(out / "matches.jsonl", dump_matches(result.matches))
    rows = [MetricsReport.CSV_HEADER] + [r.csv_row() for r in result.reports]
    _write(out / "metrics.csv", "\n".join(rows) + "\n")
    _write(out / "metrics.txt", "\n".join(r.pretty() for r in result.reports) + "\n")
    if result.round_stats:
        lines = ["round,active,new_matches,wall_seconds,skew"]
        lines += [
            f"{s.round},{s.active},{s.new_matches},{s.wall_seconds:.6f},{s.skew:.3f}"
            for s in result.round_stats
        ]
        _write(out / "rounds.csv", "\n".join(lines) + "\n")
    print(f"{len(result.matches)} matches ({args.scheme}) -> {out}")
    for report in result.reports:
        print(report.pretty())
    return 0


def _cmd_eval(args) -> int:
    matches = load_matches(_read(args.matches))
    report = MetricsReport("eval", args.matches)
    if args.truth:
        report.prf_result = prf(matches, loads_truth(_read(args.truth)), closure=args.closure)
    if args.reference:
        reference = load_matches(_read(args.reference))
        report.framework = soundness_completeness(matches, reference)
        report.reference_name = str(args.reference)
    print(report.pretty())
    if args.out:
        _write(
            Path(args.out) / "metrics.csv",
            MetricsReport.CSV_HEADER + "\n" + report.csv_row() + "\n",
        )
    return 0


def _cmd_scale(args) -> int:
    """Invocation counts and wall time for scheme runs over cover prefixes,
    next to the cost of one holistic run on the same entities."""
    instance = loads_instance(_read(args.instance))
    matcher = _make_matcher(args)
    instance, cover = _prepare_cover(instance, args)
    prefixes = sorted({int(p) for p in args.prefixes.split(",") if p.strip()})
    rows = [
        (
            "prefix",
            "entities",
            "mmp_invocations",
            "mmp_matches",
            "mmp_wall",
            "holistic_pairs",
            "holistic_wall",
            "holistic_matches",
        )
    ]
    for prefix in prefixes:
        sub = cover.prefix(min(prefix, len(cover)))
        start = time.perf_counter()
        matches, state = mmp(matcher, instance, sub)
        wall = time.perf_counter() - start
        members = frozenset().union(frozenset(), *(n.members for n in sub))
        pairs = matcher.candidate_pairs(instance, members) if is_probabilistic(matcher) else frozenset()
        if len(pairs) <= args.pair_cap:
            start = time.perf_counter()
            holistic = matcher.match(instance, members)
            h_wall, h_matches = f"{time.perf_counter() - start:.6f}", str(len(holistic))
        else:
            h_wall, h_matches = "infeasible", "infeasible"
        rows.append(
            (
                str(len(sub)),
                str(len(members)),
                str(state.invocations),
                str(len(matches)),
                f"{wall:.6f}",
                str(len(pairs)),
                h_wall,
                h_matches,
            )
        )
    text = "\n".join(",".join(row) for row in rows) + "\n"
    _write(Path(args.out) / "scale.csv", text)
    counts = np.array([[float(r[0]), float(r[2])] for r in rows[1:]])
    if len(counts) >= 3:
        slope, intercept = np.polyfit(counts[:, 0], counts[:, 1], 1)
        predicted = slope * counts[:, 0] + intercept
        residual = counts[:, 1] - predicted
        total = counts[:, 1] - counts[:, 1].mean()
        r2 = 1.0 - (residual @ residual) / max((total @ total), 1e-12)
        print(f"invocations vs prefix: slope={slope:.2f} r2={r2:.4f}")
    print(text)
    return 0


def _cmd_axioms(args) -> int:
    matcher = _make_matcher(args)
    rng = random.Random(args.seed)
    failures = 0
    for trial in range(args.instances):
        instance = random_instance(rng, entities=rng.randint(4, 9))
        ids = sorted(instance.entities)
        report = check_idempotence(matcher, instance, ids)
        print(f"[{trial:03d}] idempotence: {'pass' if report else 'FAIL ' + report.detail}")
        failures += not report
        base_ids = ids[: rng.randint(2, len(ids))]
        report = check_monotonicity(
            matcher, instance, (base_ids, Evidence()), (ids, Evidence())
        )
        print(f"[{trial:03d}] monotonicity: {'pass' if report else 'FAIL ' + report.detail}")
        failures += not report
        if is_probabilistic(matcher):
            pairs = sorted(matcher.candidate_pairs(instance, ids))
            if len(pairs) >= 2:
                smaller = frozenset(p for p in pairs if rng.random() < 0.3)
                larger = smaller | frozenset(p for p in pairs if rng.random() < 0.3)
                pair = rng.choice(pairs)
                report = check_supermodularity(
                    matcher, instance, ids, smaller, larger, pair
                )
                print(
                    f"[{trial:03d}] supermodularity: "
                    f"{'pass' if report else 'FAIL ' + report.detail}"
                )
                failures += not report
    if failures:
        print(f"{failures} axiom checks failed")
        return 2
    print("all axiom checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="empass",
        description="Scale a collective entity matcher over neighborhood covers.",
    )
    parser.add_argument("--config", help="key=value file with default options")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = {}

    p = sub.add_parser("generate", help="generate a synthetic bibliography corpus")
    p.add_argument("--authors", type=int, default=100)
    p.add_argument("--papers-per-author", type=float, default=2.0)
    p.add_argument("--max-coauthors", type=int, default=3)
    p.add_argument("--mutation", type=float, default=0.3)
    p.add_argument("--cites", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("cover", help="build and report a total canopy cover")
    p.add_argument("--instance", required=True)
    p.add_argument("--loose", type=float, default=0.75)
    p.add_argument("--tight", type=float, default=0.9)
    p.add_argument("--out", default="out")
    p.set_defaults(func=_cmd_cover)

    p = sub.add_parser("run", help="run a matching scheme end to end")
    p.add_argument("--instance", required=True)
    p.add_argument("--truth")
    p.add_argument("--matcher", default="mln", choices=list(matcher_names()))
    p.add_argument("--rules", help="path to a .rules file (overrides --matcher)")
    p.add_argument("--scheme", default="mmp", choices=["no-mp", "smp", "mmp"])
    p.add_argument("--cover", help="neighborhoods file; default builds canopies")
    p.add_argument("--loose", type=float, default=0.75)
    p.add_argument("--tight", type=float, default=0.9)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("eval", help="score a matches file")
    p.add_argument("--matches", required=True)
    p.add_argument("--truth")
    p.add_argument("--reference", help="reference matches for soundness/completeness")
    p.add_argument("--closure", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("scale", help="cost of scheme runs over cover prefixes")
    p.add_argument("--instance", required=True)
    p.add_argument("--matcher", default="mln", choices=list(matcher_names()))
    p.add_argument("--rules")
    p.add_argument("--prefixes", default="1,2,4,8,16,32,64,128")
    p.add_argument("--pair-cap", type=int, default=18)
    p.add_argument("--loose", type=float, default=0.75)
    p.add_argument("--tight", type=float, default=0.9)
    p.add_argument("--cover")
    p.add_argument("--out", default="out")
    p.set_defaults(func=_cmd_scale)

    p = sub.add_parser("axioms", help="run matcher axiom checkers on random instances")
    p.add_argument("--matcher", default="mln", choices=list(matcher_names()))
    p.add_argument("--rules")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_axioms)

    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            parser.subcommands = dict(action.choices)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            # config values replace options still at their parser default;
            # explicit command-line flags win
            defaults = _load_config(args.config)
            subparser = parser.subcommands[args.command]
            for key, value in defaults.items():
                attr = key.replace("-", "_")
                if hasattr(args, attr) and subparser.get_default(attr) == getattr(args, attr):
                    setattr(args, attr, value)
        return args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MatcherError as exc:
        print(f"matcher error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
