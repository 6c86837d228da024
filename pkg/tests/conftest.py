import numpy as np
import pytest

from controkit.embeddings import EmbeddingTable
from controkit.textprep import Vocabulary


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_vocab():
    return Vocabulary.from_tokens(["alpha", "beta", "gamma", "delta", "epsilon"], {})


@pytest.fixture
def small_embedding(small_vocab, rng):
    return EmbeddingTable.random(small_vocab, 4, rng)
