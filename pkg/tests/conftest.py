import pytest

from rlfc import decoder, encoder
from rlfc.hierarchy import EncodingParams
from rlfc.lightfield import SyntheticSpec, synthesize_lightfield

LOSSLESS = EncodingParams(pixel_threshold=0, block_threshold=0, quant_shift=0,
                          root_codec="raw")


@pytest.fixture(scope="session")
def lf():
    """The committed synthetic scene: 8x8 views of 64x64, seed 7."""
    return synthesize_lightfield(SyntheticSpec())


@pytest.fixture(scope="session")
def stream_default(lf):
    """Default (lossy) encode: h=3 B=4 Tp=4 Tb=80 s=2 gaussian png."""
    data, _ = encoder.compress(lf)
    return data


@pytest.fixture(scope="session")
def state_default(stream_default):
    return decoder.init(stream_default)


@pytest.fixture(scope="session")
def stream_lossless(lf):
    data, _ = encoder.compress(lf, LOSSLESS)
    return data


@pytest.fixture(scope="session")
def state_lossless(stream_lossless):
    return decoder.init(stream_lossless)


@pytest.fixture(scope="session")
def small_lf():
    """A quick 4x4 grid of 32x32 views for integration-style tests."""
    return synthesize_lightfield(
        SyntheticSpec(s_count=4, t_count=4, width=32, height=32, seed=11))
