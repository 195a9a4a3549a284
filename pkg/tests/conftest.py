import pytest

from empass.datasets import running_example, running_example_cover
from empass.mln import MlnMatcher, example_rules, learned_rules
from empass.rules import RulesMatcher


@pytest.fixture(scope="session")
def example_instance():
    return running_example()


@pytest.fixture(scope="session")
def example_cover(example_instance):
    return running_example_cover(example_instance)


@pytest.fixture()
def mln_example():
    return MlnMatcher(example_rules(), name="mln-example")


@pytest.fixture()
def mln_learned():
    return MlnMatcher(learned_rules(), name="mln")


@pytest.fixture()
def rules_matcher():
    return RulesMatcher()
