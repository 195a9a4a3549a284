import random

import pytest

from empass.model import Entity, ValidationError
from empass.similarity import (
    build_similar_tuples,
    discretize_similarity,
    jaro_winkler,
)
from empass.synth import random_instance


def author(name):
    fname, _, lname = name.rpartition(" ")
    return Entity(name, "author", {"fname": fname, "lname": lname})


def test_identical_strings_are_level_three():
    a, b = author("John Doe"), author("John Q. Doe")
    assert jaro_winkler("John Doe", "John Doe") == 1.0
    assert discretize_similarity(a, a) == 3


def test_discretization_is_symmetric_on_random_names():
    rng = random.Random(5)
    instance = random_instance(rng, entities=12)
    entities = list(instance.entities.values())
    for a in entities:
        for b in entities:
            if a.id != b.id:
                assert discretize_similarity(a, b) == discretize_similarity(b, a)


# frozen golden values of this implementation's Jaro-Winkler
GOLDEN = [
    ("John Doe", "J. Doe", 0.7775, None),
    ("Mary Smith", "M. Smith", 0.8725, 1),
    ("Wei Chen", "Wei Chn", 0.975, 3),
    ("Mary Smith", "Mary Smth", 0.98, 3),
]


@pytest.mark.parametrize("s1,s2,score,level", GOLDEN)
def test_frozen_similarity_goldens(s1, s2, score, level):
    assert jaro_winkler(s1, s2) == pytest.approx(score, abs=1e-4)
    assert discretize_similarity(author(s1), author(s2)) == level


def test_missing_name_attributes_error():
    paper = Entity("p1", "paper", {"title": "on matching"})
    with pytest.raises(ValidationError):
        discretize_similarity(paper, author("John Doe"))


def test_build_similar_tuples_adds_leveled_pairs():
    instance = random_instance(random.Random(2), entities=8, similar_density=0.0)
    assert not instance.store.tuples("Similar")
    built = build_similar_tuples(instance, block_key=None)
    for pair in built.store.tuples("Similar"):
        assert built.store.level_of(pair) in (1, 2, 3)
