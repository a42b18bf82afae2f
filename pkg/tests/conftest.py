import numpy as np
import pytest

from svdwdr.image_io import GrayImage, write_image

skdata = pytest.importorskip("skimage.data")
from skimage.color import rgb2gray  # noqa: E402


def _corpus_arrays():
    astronaut = np.floor(rgb2gray(skdata.astronaut()) * 255 + 0.5).astype(np.uint8)
    return {
        "astronaut": astronaut,
        "camera": skdata.camera(),
        "moon": skdata.moon(),
    }


@pytest.fixture(scope="session")
def corpus_arrays():
    return _corpus_arrays()


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory, corpus_arrays):
    """Three public 512x512 8-bit grayscale images written as PGM."""
    root = tmp_path_factory.mktemp("corpus")
    for name, arr in corpus_arrays.items():
        assert arr.shape == (512, 512) and arr.dtype == np.uint8
        write_image(GrayImage(arr), root / f"{name}.pgm")
    return root


@pytest.fixture(scope="session")
def camera(corpus_arrays):
    return GrayImage(corpus_arrays["camera"])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def small_image(seed=0, shape=(64, 48)):
    """Smooth gradient plus noise; compressible but not trivial."""
    r = np.random.default_rng(seed)
    yy, xx = np.mgrid[: shape[0], : shape[1]]
    base = 100 + 60 * np.sin(xx / 7.0) * np.cos(yy / 11.0) + r.normal(0, 8, shape)
    return GrayImage(np.clip(base, 0, 255).astype(np.uint8))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
