"""
Pytest configuration and shared fixtures for bakerspec tests
"""

import pytest
import sys
import os
import shutil
import tempfile

import numpy as np
import yaml

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test outputs"""
    path = tempfile.mkdtemp(prefix='bakerspec_')

    yield path

    # Cleanup
    shutil.rmtree(path, ignore_errors=True)


@pytest.fixture
def cache_dir(temp_dir):
    """Spectrum cache directory inside the temp dir"""
    return os.path.join(temp_dir, 'cache')


@pytest.fixture
def rng():
    """Seeded generator so random inputs are reproducible"""
    return np.random.default_rng(1234)


@pytest.fixture
def temp_config_file():
    """Create a temporary YAML configuration file for testing"""
    config_data = {
        'sff': {
            'ell_small': 10,
            'residual_norm': 'rms',
        },
        'ergodicity': {
            'c': 2.0,
        },
        'runner': {
            'jobs': 2,
        },
    }

    temp_file = tempfile.NamedTemporaryFile(mode='w', suffix='.yaml', delete=False)
    yaml.safe_dump(config_data, temp_file)
    temp_file.close()

    yield temp_file.name

    # Cleanup
    if os.path.exists(temp_file.name):
        os.unlink(temp_file.name)


@pytest.fixture
def small_bv_spec():
    """Balazs-Voros map small enough to diagonalize instantly"""
    from quantizer import preset_spec
    return preset_spec('BV', 2, 16)


@pytest.fixture
def small_manifest_data(temp_dir):
    """Gap-ratio manifest over two CUE draws"""
    return {
        'experiment': 'gapratio-scan',
        'name': 'cue_small',
        'seed': 3,
        'output_dir': os.path.join(temp_dir, 'results'),
        'specs': [{'kind': 'CUE', 'N': 40, 'seed': [0, 1]}],
    }


# Utility functions for tests
def assert_unitary(entries, tolerance=1e-10):
    """Assert U·U† = I to within tolerance·N"""
    entries = np.asarray(entries)
    N = entries.shape[0]
    defect = np.linalg.norm(entries @ entries.conj().T - np.eye(N))
    assert defect < tolerance * N, f"unitarity defect {defect:.3e}"


def equally_spaced_angles(N, offset=0.0):
    """Picket-fence spectrum 2πn/N + offset, sorted in [0, 2π)"""
    return np.sort(np.mod(2 * np.pi * np.arange(N) / N + offset, 2 * np.pi))
