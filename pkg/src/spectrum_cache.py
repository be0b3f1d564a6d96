"""
bakerspec Spectrum Cache
Content-addressed on-disk store of eigenangles (and optionally eigenvectors)
"""

import threading
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from loguru import logger

from config import config
from linalg_core import SpectrumData, eigendecompose
from quantizer import QuantizationSpec, build_map
from rmt_ensembles import EnsembleSpec, sample
from utils import content_hash, ensure_directory, safe_json_save

CacheableSpec = Union[QuantizationSpec, EnsembleSpec]


def spec_key(spec: CacheableSpec) -> str:
    """xxhash64 of the canonical spec record, tagged with its kind"""
    kind = 'ensemble' if isinstance(spec, EnsembleSpec) else 'quantization'
    return content_hash({'kind': kind, 'spec': spec.to_record()})


def compute_spectrum(spec: CacheableSpec, with_vectors: bool = False) -> SpectrumData:
    """Build the matrix described by spec and diagonalize it"""
    matrix = sample(spec) if isinstance(spec, EnsembleSpec) else build_map(spec)
    return eigendecompose(matrix, with_vectors=with_vectors)


class SpectrumCache:
    """Manages the spectrum store; one .npy file per spec"""

    def __init__(self, cache_dir: Optional[Union[str, Path]] = None, enabled: bool = True):
        self.cache_dir = Path(cache_dir or config.get('runner.cache_dir'))
        self.enabled = enabled
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

        if self.enabled:
            ensure_directory(self.cache_dir)

        logger.info(f"SpectrumCache initialized at {self.cache_dir} (enabled: {self.enabled})")

    def _paths(self, key: str):
        return (self.cache_dir / f"{key}.npy",
                self.cache_dir / f"{key}.vectors.npy",
                self.cache_dir / f"{key}.json")

    def _count(self, hit: bool):
        with self._lock:
            if hit:
                self.hits += 1
            else:
                self.misses += 1

    def _read(self, key: str, with_vectors: bool) -> Optional[SpectrumData]:
        angles_path, vectors_path, _ = self._paths(key)
        if not angles_path.exists() or (with_vectors and not vectors_path.exists()):
            return None
        try:
            angles = np.load(angles_path, allow_pickle=False)
            vectors = np.load(vectors_path, allow_pickle=False) if with_vectors else None
            return SpectrumData(angles=angles, eigenvectors=vectors)
        except Exception as e:
            logger.warning(f"Corrupt cache entry {key}: {e}; recomputing")
            return None

    def _write(self, key: str, spec: CacheableSpec, spectrum: SpectrumData):
        angles_path, vectors_path, meta_path = self._paths(key)
        np.save(angles_path, np.asarray(spectrum.angles))
        if spectrum.has_vectors:
            np.save(vectors_path, np.asarray(spectrum.eigenvectors))
        safe_json_save({'key': key, 'spec': spec.to_record(), 'N': spectrum.dim}, meta_path)

    def get(self, spec: CacheableSpec, with_vectors: bool = False) -> SpectrumData:
        """Spectrum for spec, from disk when present

        Args:
            spec: Quantization or ensemble spec
            with_vectors: Require eigenvectors

        Returns:
            SpectrumData
        """
        if not self.enabled:
            self._count(hit=False)
            return compute_spectrum(spec, with_vectors)

        key = spec_key(spec)
        cached = self._read(key, with_vectors)
        if cached is not None:
            self._count(hit=True)
            logger.debug(f"Cache hit {key} ({type(spec).__name__} N={spec.N})")
            return cached

        self._count(hit=False)
        spectrum = compute_spectrum(spec, with_vectors)
        self._write(key, spec, spectrum)
        logger.debug(f"Cache miss {key}: stored N={spectrum.dim}")
        return spectrum

    __call__ = get

    def contains(self, spec: CacheableSpec) -> bool:
        return self._paths(spec_key(spec))[0].exists()

    def clear(self) -> int:
        """Delete every stored entry; returns the number of files removed"""
        removed = 0
        for path in self.cache_dir.glob('*'):
            if path.suffix in ('.npy', '.json'):
                path.unlink()
                removed += 1
        logger.info(f"Cleared {removed} cache files from {self.cache_dir}")
        return removed

    def get_statistics(self) -> Dict[str, Any]:
        """Counters and on-disk size"""
        entries = list(self.cache_dir.glob('*.json')) if self.cache_dir.exists() else []
        size = sum(p.stat().st_size for p in self.cache_dir.glob('*.npy')) if entries else 0
        return {
            'hits': self.hits,
            'misses': self.misses,
            'entries': len(entries),
            'size_mb': round(size / (1024 * 1024), 3),
        }
