import numpy as np
import pytest

from molmetric.chemnet import Architecture, seeded_init
from molmetric.harness import fingerprints_of, load_bundled_corpus

# A narrow network that keeps the numerics tests fast.
SMALL_ARCH = Architecture(
    conv1_filters=4, conv1_kernel=3, conv2_filters=5, conv2_kernel=5, lstm1_units=6, lstm2_units=7, dense_units=3
)


@pytest.fixture(scope="session")
def small_model():
    return seeded_init(SMALL_ARCH, seed=3)


@pytest.fixture(scope="session")
def corpus():
    return load_bundled_corpus()


@pytest.fixture(scope="session")
def corpus_fps(corpus):
    return fingerprints_of(corpus.smiles)


@pytest.fixture(scope="session")
def seeded_model():
    return seeded_init(seed=0)


def random_psd(rng: np.random.Generator, d: int, rank: int | None = None, scale: float = 1.0) -> np.ndarray:
    f = rng.normal(size=(d, rank or d + 2)) * scale
    c = f @ f.T / f.shape[1]
    return (c + c.T) / 2
