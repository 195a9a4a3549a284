"""Bundled data: the frozen didactic instance, its cover, and rule files.

The didactic instance is a nine-reference coauthorship graph with three
name groups (a*, b*, c*) plus one distinct author d1.  Three overlapping
neighborhoods cover it; the middle one holds the only tuple that the outer
two miss.  It anchors most golden tests.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from .covering import Cover
from .mln import RuleSet, parse_rules
from .model import Instance, loads_instance


def _data_text(filename: str) -> str:
    return resources.files("empass").joinpath("data", filename).read_text("utf-8")


def running_example() -> Instance:
    return loads_instance(_data_text("running_example.jsonl"))


#: The three frozen neighborhoods of the didactic cover.
RUNNING_EXAMPLE_NEIGHBORHOODS = (
    ("a1", "a2", "b1", "b2", "b3"),
    ("b1", "b2", "b3", "c1", "c2", "c3"),
    ("b2", "b3", "c1", "c2", "c3", "d1"),
)


def running_example_cover(instance: Instance | None = None) -> Cover:
    if instance is None:
        instance = running_example()
    return Cover.of(instance, RUNNING_EXAMPLE_NEIGHBORHOODS)


def load_ruleset(path: str | Path, name: str | None = None) -> RuleSet:
    path = Path(path)
    return parse_rules(path.read_text("utf-8"), name or path.stem)


def preset_rules_path(name: str) -> Path:
    """Filesystem path of a bundled .rules preset (``example`` or ``learned``)."""
    candidate = resources.files("empass").joinpath("data", f"{name}.rules")
    with resources.as_file(candidate) as path:
        return Path(path)
