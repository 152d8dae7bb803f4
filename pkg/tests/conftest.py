"""Pytest configuration and fixtures for dual_domain_fusion tests."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from dual_domain_fusion.core.config import FusionConfig
from dual_domain_fusion.core.tensor import make_rng
from dual_domain_fusion.data.defaults import GRADCHECK_CONFIG
from dual_domain_fusion.io.writers import write_image


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test outputs."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def rng():
    """Seeded generator; every test gets the same stream."""
    return make_rng(1234)


@pytest.fixture
def small_config():
    """4 x 8 x 8 configuration used by the gradient checks."""
    return FusionConfig.from_dict(GRADCHECK_CONFIG)


@pytest.fixture
def toy_config():
    """Reduced toy training setup: 8 channels, 8 x 8 maps from 32 x 32 images."""
    return FusionConfig.from_dict(
        {'C': 8, 'H': 8, 'W': 8, 'reduction': 2, 'n': 4, 'r_e': 2, 'm': 8, 'samples': 40, 'epochs': 2}
    )


@pytest.fixture
def image_pair(rng):
    """Fake/source RGB pair of 32 x 32 pixels differing only in one 8 x 8 block."""
    source = rng.uniform(0.2, 0.8, size=(32, 32, 3))
    fake = source.copy()
    fake[12:20, 4:12] = 1.0 - fake[12:20, 4:12]
    return fake, source


@pytest.fixture
def image_files(image_pair, temp_dir):
    """The image pair written as PNG files."""
    fake, source = image_pair
    fake_path = write_image(temp_dir / 'fake.png', fake)
    source_path = write_image(temp_dir / 'source.png', source)
    return fake_path, source_path


@pytest.fixture
def perfect_scores_csv(temp_dir):
    """Score table with fakes scored above every real."""
    filepath = temp_dir / 'perfect.csv'
    filepath.write_text('score,label\n0.9,1\n0.8,1\n0.2,0\n0.1,0\n')
    return filepath


@pytest.fixture
def non_existent_file(temp_dir):
    """Return path to a non-existent file."""
    return temp_dir / 'non_existent.d2ft'


@pytest.fixture
def random_features(rng):
    """Seeded 8 x 16 x 16 float32 feature map."""
    return rng.standard_normal((8, 16, 16)).astype(np.float32)
