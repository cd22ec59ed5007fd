import numpy as np
import pytest

from gradrank import RankerConfig, generate_synthetic_corpus, init_model, train
from gradrank.text import EmbeddingTable


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def basis_emb():
    return EmbeddingTable.from_vectors({
        "a": [1.0, 0.0, 0.0],
        "b": [0.0, 1.0, 0.0],
        "c": [0.0, 0.0, 1.0],
    })


@pytest.fixture(scope="session")
def small_corpus():
    return generate_synthetic_corpus(40, 80, seed=3)


@pytest.fixture(scope="session")
def trained_small(small_corpus):
    data, emb = small_corpus
    model = train(init_model(RankerConfig(seed=5)), data, emb, epochs=3)
    return model, data, emb


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        status, title, detail = mod.RESULTS[key]
        extra = ", ".join(f"{k}={v}" for k, v in detail.items())
        terminalreporter.write_line(f"[{status}] criterion {key}: {title}" + (f" ({extra})" if extra else ""))
