import pytest
from hypothesis import given, strategies as st

from empass.model import (
    Evidence,
    ValidationError,
    canonical_pair,
    canonical_pairs,
    dumps_instance,
    induced_relations,
    loads_instance,
    make_instance,
)

ids = st.text(alphabet="abcdxyz123", min_size=1, max_size=4)


def test_canonical_pair_orders_and_is_symmetric():
    assert canonical_pair("e2", "e1") == ("e1", "e2")
    assert canonical_pair("e1", "e2") == ("e1", "e2")


def test_canonical_pair_rejects_reflexive():
    with pytest.raises(ValidationError):
        canonical_pair("e1", "e1")


@given(ids, ids)
def test_canonical_pair_symmetry_property(a, b):
    if a == b:
        return
    assert canonical_pair(a, b) == canonical_pair(b, a)
    assert canonical_pair(a, b)[0] < canonical_pair(a, b)[1]


@given(st.lists(st.tuples(ids, ids)))
def test_matchset_ops_are_set_algebra(raw):
    pairs = canonical_pairs((a, b) for a, b in raw if a != b)
    assert pairs | pairs == pairs
    assert pairs & pairs == pairs
    assert canonical_pairs(sorted(pairs)) == pairs


def test_evidence_rejects_overlap():
    with pytest.raises(ValidationError):
        Evidence.of([("a", "b")], [("b", "a")])


def test_relations_must_reference_known_entities():
    with pytest.raises(ValidationError):
        make_instance(["a", "b"], [("Coauthor", "a", "zz")])


def test_symmetric_relations_stored_canonically(example_instance):
    store = example_instance.store
    assert ("a1", "b2") in store.tuples("Coauthor")
    inst = make_instance(["a", "b"], [("Coauthor", "b", "a"), ("Similar", "b", "a", 2)])
    assert inst.store.tuples("Coauthor") == {("a", "b")}
    assert inst.store.level_of(("a", "b")) == 2


def test_induced_full_set_is_identity(example_instance):
    induced = induced_relations(example_instance.store, example_instance.ids())
    assert induced.relations == example_instance.store.relations


def test_induced_empty_set_is_empty(example_instance):
    induced = induced_relations(example_instance.store, frozenset())
    assert induced.count() == 0


def test_induced_rejects_unknown_ids(example_instance):
    with pytest.raises(ValidationError):
        example_instance.induced({"a1", "nope"})


def test_induced_monotone_in_members(example_instance):
    ids = sorted(example_instance.ids())
    store = example_instance.store
    for cut in range(len(ids)):
        small = induced_relations(store, ids[:cut])
        big = induced_relations(store, ids[: cut + 1])
        for name, tuples in small.relations.items():
            assert tuples <= big.tuples(name)


def test_fig2_middle_neighborhood_is_where_the_bridging_tuple_lives(
    example_instance, example_cover
):
    # the (b1, c1) edge is induced only by the middle neighborhood
    c1, c2, c3 = (n.induced for n in example_cover)
    assert ("b1", "c1") in c2.tuples("Coauthor")
    assert ("b1", "c1") not in c1.tuples("Coauthor")
    assert ("b1", "c1") not in c3.tuples("Coauthor")


def test_serialization_round_trip_is_byte_exact(example_instance):
    text = dumps_instance(example_instance)
    again = dumps_instance(loads_instance(text))
    assert again == text


def test_bundled_instance_file_matches_serializer(example_instance):
    from empass.datasets import _data_text

    assert dumps_instance(example_instance) == _data_text("running_example.jsonl")
