import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from oracles import load_nodes  # noqa: E402

CORPUS = os.path.join(os.path.dirname(__file__), "..", "corpus")


def corpus_path(name: str) -> str:
    return os.path.normpath(os.path.join(CORPUS, name))


def read_corpus(name: str) -> str:
    with open(corpus_path(name), encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="session")
def sys1_env():
    return load_nodes(read_corpus("sys1.lus"))


@pytest.fixture(scope="session")
def sys2_env():
    return load_nodes(read_corpus("sys2.lus"))


@pytest.fixture(scope="session")
def small_env():
    return load_nodes(read_corpus("small_nodes.lus"))
