"""
bakerspec - quantized baker's maps and their spectral statistics

Builds the quantum A-baker's maps, diagonalizes them and compares level spacings,
spectral form factors and persistence against periodic-orbit predictions and
random-matrix ensembles.

License: MIT
"""

__version__ = '0.3.0'
__license__ = 'MIT'
__description__ = "Quantized baker's maps and their spectral statistics"

# Package metadata
__package_info__ = {
    'name': 'bakerspec',
    'version': __version__,
    'license': __license__,
    'description': __description__,
    'keywords': [
        'quantum-chaos', 'baker-map', 'random-matrix-theory', 'spectral-form-factor',
        'level-spacing', 'periodic-orbits',
    ],
    'classifiers': [
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Physics',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Operating System :: OS Independent',
    ]
}


def get_version():
    """Get the current version of bakerspec"""
    return __version__


def get_package_info():
    """Get package information dictionary"""
    return __package_info__.copy()


def check_dependencies():
    """Check if all required dependencies are available"""
    missing_deps = []

    core_deps = [
        ('numpy', 'Dense linear algebra'),
        ('scipy', 'Schur decomposition and special functions'),
        ('pandas', 'Result tables'),
        ('loguru', 'Logging'),
        ('yaml', 'Manifests and configuration'),
        ('dotenv', 'Environment configuration'),
        ('joblib', 'Worker pools'),
        ('orjson', 'JSON summaries'),
        ('xxhash', 'Cache keys'),
        ('tqdm', 'Progress bars'),
    ]

    for dep, desc in core_deps:
        try:
            __import__(dep)
        except ImportError:
            missing_deps.append((dep, desc))

    return {
        'missing_required': missing_deps,
        'all_satisfied': len(missing_deps) == 0
    }


__all__ = ['get_version', 'get_package_info', 'check_dependencies']
