#!/usr/bin/env python3
"""
bakerspec Command Line Interface
Builds quantized baker's maps and runs the spectral-statistics experiments
"""

import argparse
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from joblib import Parallel, delayed
from loguru import logger

# Add src directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import config, load_config_file
from errors import BakerSpecError, ManifestError
from linalg_core import save_matrix
from quantizer import PRESETS, QuantizationSpec, build_map, preset_spec
from rmt_ensembles import KINDS, EnsembleSpec
from runner import ExperimentManifest, ExperimentRunner, RunResult
from spectral_stats import mean_gap_ratio
from spectrum_cache import SpectrumCache, spec_key
from utils import setup_logging, write_csv

# CLI verb → runner experiment
VERB_EXPERIMENTS = {
    'gapratio': 'gapratio-scan',
    'spacing-hist': 'spacing-hist',
    'sff': 'sff',
    'slope-scan': 'slope-scan',
    'persistence': 'persistence',
    'commutator-scan': 'commutator-scan',
    'husimi': 'husimi',
    'interpolate': 'interpolation',
    'orbit-check': 'orbit-check',
    'phase-sweep': 'phase-sweep',
}


class BakerSpecCLI:
    """Command line interface for bakerspec operations"""

    def __init__(self, cache_dir: Optional[str] = None, jobs: Optional[int] = None):
        self.cache = SpectrumCache(cache_dir)
        self.runner = ExperimentRunner(cache=self.cache, jobs=jobs)
        self.jobs = self.runner.jobs

        logger.info("bakerspec CLI initialized")

    def build_matrices(self, specs: List[QuantizationSpec], out_dir: Path) -> List[Path]:
        """Write one container per spec into out_dir, named <family>_A<A>_N<N>_<key>.bin"""
        def one(spec):
            name = f"{spec.family}_A{spec.A}_N{spec.N}_{spec_key(spec)}.bin"
            return self.build_matrix(spec, Path(out_dir) / name)

        return Parallel(n_jobs=self.jobs, prefer='threads')(delayed(one)(s) for s in specs)

    def write_spectra(self, specs: List, out_dir: Optional[Path]) -> List[Dict[str, Any]]:
        """Diagonalize every spec through the cache; CSVs go to out_dir as <key>.csv"""
        def one(spec):
            out = Path(out_dir) / f"{spec_key(spec)}.csv" if out_dir is not None else None
            return {'key': spec_key(spec), **self.write_spectrum(spec, out)}

        return Parallel(n_jobs=self.jobs, prefer='threads')(delayed(one)(s) for s in specs)

    def build_matrix(self, spec: QuantizationSpec, out: Path) -> Path:
        """Write the map's matrix to the binary container"""
        matrix = build_map(spec)
        path = save_matrix(matrix, out)
        print(f"Built {spec.family} A={spec.A} N={spec.N}: unitarity defect {matrix.unitarity_defect:.3e}")
        print(f"Matrix written to {path}")
        return path

    def write_spectrum(self, spec, out: Optional[Path]) -> Dict[str, Any]:
        """Diagonalize (through the cache) and optionally write (index, angle) CSV"""
        spectrum = self.cache.get(spec)
        if out is not None:
            write_csv(spectrum.to_frame(), out)
        result = {'N': spectrum.dim, 'mean_gap_ratio': mean_gap_ratio(spectrum)}
        print(f"Spectrum N={spectrum.dim}: ⟨r⟩ = {result['mean_gap_ratio']:.5f}")
        return result

    def run_experiment(self, manifest: ExperimentManifest) -> RunResult:
        result = self.runner.run(manifest)
        self._print_summary(result)
        return result

    def _print_summary(self, result: RunResult):
        summary = result.summary
        print(f"\n{'=' * 50}")
        print(f"{summary['name']} ({summary['experiment']})")
        print(f"{'=' * 50}")
        print(f"Specs: {summary['specs']}  failed rows: {summary['errors']}")
        print(f"Cache: {summary['cache_hits']} hits, {summary['cache_misses']} misses")
        for path in result.files:
            print(f"  {path}")
        print(f"{'=' * 50}")


def _inline_records(args) -> List[Dict[str, Any]]:
    """Spec records from --preset/--family/--kind flags, one per N"""
    if not args.N:
        raise ManifestError("Give --manifest or an inline spec with -N")
    records = []
    for N in args.N:
        if args.kind:
            records.append({'kind': args.kind, 'N': N, 't_interp': args.t_interp,
                            **({'seed': args.ensemble_seed} if args.ensemble_seed is not None else {})})
            continue
        if args.A is None:
            raise ManifestError("Inline quantization specs need -A")
        record: Dict[str, Any] = {'A': args.A, 'N': N}
        if args.preset:
            record['preset'] = args.preset
        else:
            record['family'] = args.family or 'BalazsVoros'
            if args.theta:
                record['theta'] = list(args.theta)
        if args.alpha:
            record['alpha'] = list(args.alpha)
        if args.alpha_seed is not None:
            record['alpha_seed'] = args.alpha_seed
        records.append(record)
    return records


def _single_spec(args):
    records = _inline_records(args)
    if len(records) != 1:
        raise ManifestError("This command takes exactly one -N value")
    record = records[0]
    if 'kind' in record:
        if args.seed is not None and 'seed' not in record:
            record['seed'] = args.seed
        return EnsembleSpec.from_record(record)
    if 'preset' in record:
        return preset_spec(record['preset'], record['A'], record['N'],
                           alpha=record.get('alpha'), seed=record.get('alpha_seed'))
    return QuantizationSpec.from_record(record)


def _batch_specs(args) -> Optional[List]:
    """Specs for a batch build/spectrum: every spec of --manifest, or several -N values

    Returns None for the single inline spec, which keeps --out as a file path.
    """
    if args.manifest:
        return ExperimentManifest.load(args.manifest, seed=args.seed).specs
    if args.N and len(args.N) > 1:
        data = {'experiment': 'gapratio-scan', 'specs': _inline_records(args)}
        if args.seed is not None:
            data['seed'] = args.seed
        return ExperimentManifest.from_dict(data).specs
    return None


def _params(args) -> Dict[str, Any]:
    """Experiment params from the optional tuning flags"""
    params: Dict[str, Any] = {}
    for flag, key in (('ell', 'ell'), ('fit_points', 'fit_points'), ('residual_threshold', 'residual_threshold'),
                      ('grid', 'grid'), ('resolution', 'resolution'), ('eigenvectors', 'eigenvectors'),
                      ('times', 'times'), ('t_values', 't_values'), ('prefactor', 'prefactor')):
        value = getattr(args, flag, None)
        if value is not None:
            params[key] = value
    if getattr(args, 'phases', None):
        start, stop, step = args.phases
        params['phases'] = {'start': start, 'stop': stop, 'step': step}
    if getattr(args, 'sectors', False):
        params['sectors'] = True
    if getattr(args, 'structure', None):
        params['structure'] = [list(pair) for pair in zip(args.structure[::2], args.structure[1::2])]
    return params


def build_manifest(experiment: str, args) -> ExperimentManifest:
    """Manifest from --manifest, with command-line overrides, or from inline flags"""
    if args.manifest:
        manifest = ExperimentManifest.load(args.manifest, seed=args.seed)
        if manifest.experiment != experiment:
            raise ManifestError(f"Manifest runs {manifest.experiment!r}, command expects {experiment!r}")
        manifest.params.update(_params(args))
    else:
        data = {'experiment': experiment, 'specs': _inline_records(args), 'params': _params(args)}
        if args.seed is not None:
            data['seed'] = args.seed
        manifest = ExperimentManifest.from_dict(data)
    if args.out:
        manifest.output_dir = Path(args.out)
    manifest.validate()
    return manifest


def _add_spec_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('inline spec')
    group.add_argument('--preset', choices=sorted(PRESETS), help='Named quantization')
    group.add_argument('--family', help='Quantization family (BalazsVoros, Saraceno, Generic, ShorBaker)')
    group.add_argument('--kind', choices=KINDS, help='Random-matrix ensemble instead of a map')
    group.add_argument('-A', type=int, help='Base of the baker map')
    group.add_argument('-N', type=int, nargs='+', help='Dimension(s)')
    group.add_argument('--theta', type=float, nargs=2, help='Boundary offsets θ1 θ2 (Generic family)')
    group.add_argument('--alpha', type=float, nargs='+', help='Block phases α_j')
    group.add_argument('--alpha-seed', type=int, help='Seed for i.i.d. random block phases')
    group.add_argument('--t-interp', type=float, default=0.0, help='Interpolation parameter for ensembles')
    group.add_argument('--ensemble-seed', type=int, help='Ensemble draw seed')


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--manifest', '-m', help='YAML experiment manifest')
    parser.add_argument('--out', '-o', help='Output directory')
    parser.add_argument('--jobs', '-j', type=int, help='Worker count')
    parser.add_argument('--seed', type=int, help='Run seed')
    parser.add_argument('--cache', help='Spectrum cache directory')


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='bakerspec', description='Quantized baker maps and their spectral statistics')
    parser.add_argument('--config', help='YAML or JSON configuration file')
    parser.add_argument('--log-level', help='Logging level override')
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    build_parser = subparsers.add_parser('build', help='Build maps and write their matrices')
    _add_spec_flags(build_parser)
    build_parser.add_argument('--manifest', '-m', help='YAML manifest; builds every quantization spec it lists')
    build_parser.add_argument('--out', '-o', required=True,
                              help='Matrix container path, or a directory for several specs')
    build_parser.add_argument('--jobs', '-j', type=int, help='Worker count')
    build_parser.add_argument('--seed', type=int, help='Run seed for random_alpha specs')

    spectrum_parser = subparsers.add_parser('spectrum', help='Diagonalize maps or ensemble draws')
    _add_spec_flags(spectrum_parser)
    _add_common_flags(spectrum_parser)

    helps = {
        'gapratio': 'Mean gap ratios per spec',
        'spacing-hist': 'Pooled spacing histograms with reference densities',
        'sff': 'Spectral form factor series and slope fits',
        'slope-scan': 'Early-time SFF slopes across N with outlier removal',
        'persistence': 'Persistence z²(t), Δ² and cyclic-ergodicity verdicts',
        'commutator-scan': 'Time-reversal and Fourier-reflection defects',
        'husimi': 'Husimi grids of eigenvectors',
        'interpolate': 'Gap ratio and slope along ensemble interpolations',
        'orbit-check': 'Periodic-orbit traces against exact traces',
        'phase-sweep': 'Gap ratio and slope as one block phase varies',
    }
    for verb, text in helps.items():
        sub = subparsers.add_parser(verb, help=text)
        _add_common_flags(sub)
        _add_spec_flags(sub)
        if verb in ('sff', 'slope-scan', 'interpolate', 'phase-sweep'):
            sub.add_argument('--ell', type=int, help='Moving-average half-width')
            sub.add_argument('--fit-points', type=int, help='Points in the slope fit')
        if verb in ('sff', 'slope-scan'):
            sub.add_argument('--residual-threshold', type=float, help='Outlier threshold on the fit residual')
        if verb == 'gapratio':
            sub.add_argument('--sectors', action='store_true', help='Also split by reflection class')
        if verb == 'commutator-scan':
            sub.add_argument('--grid', type=int, help='Scan grid size per axis')
            sub.add_argument('--structure', type=int, nargs='+', help='A N pairs for the commutator structure test')
        if verb == 'husimi':
            sub.add_argument('--resolution', type=int, help='Grid size per axis')
            sub.add_argument('--eigenvectors', type=int, nargs='+', help='Eigenvector indices')
        if verb == 'interpolate':
            sub.add_argument('--t-values', type=float, nargs='+', help='Interpolation parameters to sweep')
        if verb == 'orbit-check':
            sub.add_argument('--times', type=int, nargs='+', help='Orbit lengths t')
            sub.add_argument('--prefactor', choices=('asymptotic', 'stationary'), help='Orbit-sum prefactor')
        if verb == 'phase-sweep':
            sub.add_argument('--phases', type=float, nargs=3, metavar=('START', 'STOP', 'STEP'),
                             help='Phase range for the swept block')

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the process exit status"""
    parser = create_parser()
    args = parser.parse_args(argv)

    if args.config:
        load_config_file(args.config)
    setup_logging(level=args.log_level)

    if not args.command:
        parser.print_help()
        return 1

    try:
        if args.command == 'build':
            specs = _batch_specs(args)
            cli = BakerSpecCLI(jobs=args.jobs or 1)
            if specs is None:
                spec = _single_spec(args)
                if not isinstance(spec, QuantizationSpec):
                    raise ManifestError("build takes a quantization spec")
                cli.build_matrix(spec, Path(args.out))
            else:
                if not all(isinstance(s, QuantizationSpec) for s in specs):
                    raise ManifestError("build takes quantization specs only")
                cli.build_matrices(specs, Path(args.out))

        elif args.command == 'spectrum':
            out = Path(args.out) if args.out else None
            specs = _batch_specs(args)
            cli = BakerSpecCLI(cache_dir=args.cache, jobs=args.jobs or 1)
            if specs is None:
                cli.write_spectrum(_single_spec(args), out)
            else:
                cli.write_spectra(specs, out)

        elif args.command in VERB_EXPERIMENTS:
            manifest = build_manifest(VERB_EXPERIMENTS[args.command], args)
            cli = BakerSpecCLI(cache_dir=args.cache, jobs=args.jobs or config.get('runner.jobs'))
            cli.run_experiment(manifest)

        else:
            print(f"Unknown command: {args.command}")
            parser.print_help()
            return 1

    except KeyboardInterrupt:
        print("\nOperation cancelled by user")
        return 130

    except BakerSpecError as e:
        logger.error(f"bakerspec error: {e}")
        print(f"Error: {e}")
        return 2

    except Exception as e:
        logger.error(f"CLI error: {e}")
        print(f"Error: {e}")
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main())
