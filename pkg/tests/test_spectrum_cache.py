"""
Unit tests for bakerspec spectrum cache
"""

import pytest
import sys
import os
import json

import numpy as np

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from quantizer import preset_spec
from rmt_ensembles import EnsembleSpec
from spectrum_cache import SpectrumCache, compute_spectrum, spec_key


class TestSpecKey:
    """Test cases for content addresses"""

    def test_equal_specs_share_key(self):
        """Test equal specs hash identically"""
        assert spec_key(preset_spec('BV', 2, 16)) == spec_key(preset_spec('BV', 2, 16))

    def test_fields_change_key(self):
        """Test any field change changes the key"""
        keys = {
            spec_key(preset_spec('BV', 2, 16)),
            spec_key(preset_spec('BV', 2, 18)),
            spec_key(preset_spec('Sar', 2, 16)),
            spec_key(preset_spec('BV', 2, 16, alpha=[0.0, 0.1])),
            spec_key(preset_spec('BV', 2, 16, seed=4)),
            spec_key(EnsembleSpec('CUE', 16, seed=0)),
            spec_key(EnsembleSpec('CUE', 16, seed=1)),
        }
        assert len(keys) == 7

    def test_key_format(self):
        """Test keys are 16-character hex digests"""
        key = spec_key(EnsembleSpec('COE', 10))
        assert len(key) == 16
        int(key, 16)


class TestSpectrumCache:
    """Test cases for SpectrumCache class"""

    def setup_method(self):
        """Set up test fixtures"""
        self.spec = preset_spec('BV', 2, 16)

    def test_initialization(self, cache_dir):
        """Test cache initialization creates the directory"""
        cache = SpectrumCache(cache_dir)
        assert os.path.isdir(cache_dir)
        assert cache.hits == 0 and cache.misses == 0

    def test_miss_then_hit(self, cache_dir):
        """Test the second lookup is served from disk"""
        cache = SpectrumCache(cache_dir)
        first = cache.get(self.spec)
        second = cache(self.spec)
        assert np.array_equal(first.angles, second.angles)
        assert (cache.hits, cache.misses) == (1, 1)
        assert cache.contains(self.spec)

    def test_metadata_file(self, cache_dir):
        """Test each entry writes a JSON record with its spec"""
        cache = SpectrumCache(cache_dir)
        cache.get(self.spec)
        key = spec_key(self.spec)
        with open(os.path.join(cache_dir, f"{key}.json")) as f:
            meta = json.load(f)
        assert meta['key'] == key
        assert meta['N'] == 16
        assert meta['spec']['family'] == 'BalazsVoros'

    def test_vectors_requested_later(self, cache_dir):
        """Test an angles-only entry does not satisfy a vector lookup"""
        cache = SpectrumCache(cache_dir)
        cache.get(self.spec)
        spectrum = cache.get(self.spec, with_vectors=True)
        assert spectrum.has_vectors
        assert cache.misses == 2
        again = cache.get(self.spec, with_vectors=True)
        assert np.array_equal(again.eigenvectors, spectrum.eigenvectors)
        assert cache.hits == 1

    def test_corrupt_entry_recomputed(self, cache_dir):
        """Test a corrupt file is recomputed and overwritten"""
        cache = SpectrumCache(cache_dir)
        expected = cache.get(self.spec).angles
        path = os.path.join(cache_dir, f"{spec_key(self.spec)}.npy")
        with open(path, 'wb') as f:
            f.write(b'not a numpy file')

        recovered = cache.get(self.spec)
        assert np.array_equal(recovered.angles, expected)
        assert cache.misses == 2
        assert np.array_equal(np.load(path), expected)
        cache.get(self.spec)
        assert cache.hits == 1

    def test_ensemble_entry(self, cache_dir):
        """Test ensemble specs are cached like quantizations"""
        cache = SpectrumCache(cache_dir)
        spec = EnsembleSpec('TwoBlockCOE', 20, seed=5)
        assert np.array_equal(cache.get(spec).angles, compute_spectrum(spec).angles)
        assert cache.contains(spec)

    def test_disabled(self, temp_dir):
        """Test a disabled cache computes every time and writes nothing"""
        cache_dir = os.path.join(temp_dir, 'unused')
        cache = SpectrumCache(cache_dir, enabled=False)
        cache.get(self.spec)
        cache.get(self.spec)
        assert cache.misses == 2
        assert not os.path.exists(cache_dir)

    def test_clear_and_statistics(self, cache_dir):
        """Test clear removes entries and statistics reflect them"""
        cache = SpectrumCache(cache_dir)
        cache.get(self.spec, with_vectors=True)
        stats = cache.get_statistics()
        assert stats['entries'] == 1
        assert stats['misses'] == 1
        assert cache.clear() == 3
        assert not cache.contains(self.spec)
        assert cache.get_statistics()['entries'] == 0
