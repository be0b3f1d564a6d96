"""
bakerspec Experiment Runner
Loads experiment manifests, fans per-spec work out over a worker pool and writes
deterministic CSV tables plus a JSON summary per run
"""

import itertools
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from joblib import Parallel, delayed
from loguru import logger
from tqdm import tqdm

from config import config
from errors import InvalidSpecError, ManifestError
from ergodicity import cyc_ergodicity_check, delta_squared, persistence, persistence_average
from linalg_core import SpectrumData
from orbit_theory import diag_sff_prediction, diag_time_average, slope_class, trace_po
from phase_space import husimi
from quantizer import QuantizationSpec, build_map
from rmt_ensembles import EnsembleSpec
from sff_analysis import (
    analyze_spectrum, average_sff, coe_reference, default_ell, default_fit_points,
    fit_slope, sff, slope_scan, two_block_reference,
)
from spectral_stats import RMT_GAP_RATIOS, SpacingData, histogram, mean_gap_ratio, reference_curves, spacings
from spectrum_cache import SpectrumCache, compute_spectrum, spec_key
from symmetry_probe import (
    bv_commutator_structure, classification_operator, classify_eigenvectors,
    fourier_reflection_scan, reflection_defect, reflection_operator, split_statistics, tr_defect,
)
from utils import content_hash, ensure_directory, format_timestamp, get_timestamp, safe_json_save, write_csv

Spec = Union[QuantizationSpec, EnsembleSpec]

EXPERIMENTS = ('gapratio-scan', 'spacing-hist', 'sff', 'slope-scan', 'persistence',
               'commutator-scan', 'husimi', 'interpolation', 'orbit-check', 'phase-sweep')

# experiments that need maps rather than ensemble draws, and vice versa
QUANTIZATION_ONLY = ('slope-scan', 'commutator-scan', 'husimi', 'orbit-check', 'phase-sweep')
ENSEMBLE_ONLY = ('interpolation',)

ALLOWED_PARAMS = {
    'gapratio-scan': {'sectors'},
    'spacing-hist': {'bins', 'range', 'references', 'overlay', 'overlay_samples', 'overlay_dim'},
    'sff': {'ell', 'fit_points', 'residual_threshold', 'T'},
    'slope-scan': {'ell', 'fit_points', 'residual_threshold', 'smoothing_radius'},
    'persistence': {'T', 'c', 'epsilon', 'kappa', 'ratio_window'},
    'commutator-scan': {'grid', 'classify', 'structure'},
    'husimi': {'eigenvectors', 'resolution', 'sigma'},
    'interpolation': {'t_values', 'ell', 'fit_points'},
    'orbit-check': {'times', 'prefactor'},
    'phase-sweep': {'phases', 'index', 'base_alpha', 'ell', 'fit_points'},
}

EXPANDABLE_KEYS = ('preset', 'kind', 'A', 'N', 'seed', 'alpha_seed', 't_interp')


def _values(value: Any) -> List[Any]:
    """A scalar, a list, or a {start, stop, step} range (stop exclusive)"""
    if isinstance(value, dict):
        try:
            start, stop, step = value['start'], value['stop'], value.get('step', 1)
        except KeyError as e:
            raise ManifestError(f"Range is missing {e}") from e
        if isinstance(start, int) and isinstance(stop, int) and isinstance(step, int):
            return list(range(start, stop, step))
        return [round(float(v), 12) for v in np.arange(start, stop, step)]
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def _expand_record(record: Dict[str, Any]) -> Tuple[List[Dict[str, Any]], bool]:
    keys = [k for k in EXPANDABLE_KEYS if k in record and isinstance(record[k], (list, dict))]
    if not keys:
        return [dict(record)], False
    expanded = []
    for combo in itertools.product(*[_values(record[k]) for k in keys]):
        item = dict(record)
        item.update(zip(keys, combo))
        expanded.append(item)
    return expanded, True


def parse_spec(record: Dict[str, Any]) -> Spec:
    """QuantizationSpec or EnsembleSpec from a manifest record"""
    if 'kind' in record:
        return EnsembleSpec.from_record(record)
    if 'family' in record or 'preset' in record:
        return QuantizationSpec.from_record(record)
    raise ManifestError(f"Spec record needs 'family', 'preset' or 'kind': {record}")


def group_label(spec: Spec) -> str:
    """Spec-group label: all fields except N (and the ensemble or random_alpha seed)"""
    if isinstance(spec, EnsembleSpec):
        return f"{spec.kind}_t{spec.t_interp:g}"
    label = f"{spec.family}_A{spec.A}_th{spec.theta[0]:g},{spec.theta[1]:g}"
    if spec.alpha is not None:
        label += f"_a{content_hash(list(spec.alpha))[:8]}"
    elif spec.random_alpha:
        label += "_random"
    elif spec.seed is not None:
        label += f"_s{spec.seed}"
    return label


def spec_columns(spec: Spec) -> Dict[str, Any]:
    if isinstance(spec, EnsembleSpec):
        return {'group': group_label(spec), 'key': spec_key(spec), 'kind': spec.kind, 'N': spec.N,
                't_interp': spec.t_interp, 'seed': spec.seed}
    return {'group': group_label(spec), 'key': spec_key(spec), 'family': spec.family, 'A': spec.A,
            'N': spec.N, 'theta1': spec.theta[0], 'theta2': spec.theta[1],
            'alpha_seed': -1 if spec.seed is None else spec.seed}


def _succeeded(table: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    """Rows without an error message; empty when every spec failed"""
    if any(c not in table.columns for c in columns):
        return pd.DataFrame(columns=list(columns))
    return table[table['error'] == '']


def _sorted(rows: List[Dict[str, Any]], extra: Sequence[str] = ()) -> pd.DataFrame:
    frame = pd.DataFrame(rows)
    if frame.empty:
        return frame
    keys = [k for k in ('group', 'N', 'key', *extra) if k in frame.columns]
    return frame.sort_values(keys, kind='stable').reset_index(drop=True)


@dataclass
class ExperimentManifest:
    """Declarative description of one batch experiment"""
    experiment: str
    specs: List[Spec]
    params: Dict[str, Any] = field(default_factory=dict)
    output_dir: Path = field(default_factory=lambda: Path(config.get('runner.output_dir')))
    seed: int = 0
    name: Optional[str] = None

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        self.name = self.name or self.experiment
        self.validate()

    def validate(self):
        """Check experiment name, spec list and params before anything runs

        Raises:
            ManifestError: invalid manifest
        """
        if self.experiment not in EXPERIMENTS:
            raise ManifestError(f"Unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if not self.specs:
            raise ManifestError("Manifest lists no specs")
        if self.experiment in QUANTIZATION_ONLY and not all(isinstance(s, QuantizationSpec) for s in self.specs):
            raise ManifestError(f"{self.experiment} accepts quantization specs only")
        if self.experiment in ENSEMBLE_ONLY and not all(isinstance(s, EnsembleSpec) for s in self.specs):
            raise ManifestError(f"{self.experiment} accepts ensemble specs only")
        unknown = set(self.params) - ALLOWED_PARAMS[self.experiment]
        if unknown:
            raise ManifestError(f"Unknown params for {self.experiment}: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentManifest':
        if not isinstance(data, dict):
            raise ManifestError("Manifest must be a mapping")
        if 'experiment' not in data:
            raise ManifestError("Manifest is missing 'experiment'")
        seed = int(data.get('seed', config.get('runner.seed')))
        records = data.get('specs') or []
        if not isinstance(records, list):
            raise ManifestError("'specs' must be a list")

        specs: List[Spec] = []
        for record in records:
            expanded, was_expanded = _expand_record(record)
            for item in expanded:
                drawn = bool(item.pop('random_alpha', False)) and 'alpha_seed' not in item
                if drawn:
                    item['alpha_seed'] = seed + len(specs)
                if 'kind' in item and 'seed' not in item:
                    item['seed'] = seed + len(specs)
                try:
                    spec = parse_spec(item)
                    if drawn and isinstance(spec, QuantizationSpec):
                        spec = replace(spec, random_alpha=True)
                    specs.append(spec)
                except InvalidSpecError as e:
                    if was_expanded and 'A' in item and 'N' in item and int(item['N']) % int(item['A']):
                        logger.debug(f"Skipping expanded spec with A ∤ N: {item}")
                        continue
                    raise ManifestError(f"Invalid spec {item}: {e}") from e

        return cls(experiment=data['experiment'], specs=specs, params=dict(data.get('params') or {}),
                   output_dir=Path(data.get('output_dir', config.get('runner.output_dir'))),
                   seed=seed, name=data.get('name'))

    @classmethod
    def load(cls, file_path: Union[str, Path], seed: Optional[int] = None) -> 'ExperimentManifest':
        """Read a YAML manifest; seed, when given, replaces the manifest seed"""
        try:
            with open(file_path, 'r') as f:
                data = yaml.safe_load(f)
        except (OSError, yaml.YAMLError) as e:
            raise ManifestError(f"Cannot read manifest {file_path}: {e}") from e
        if seed is not None and isinstance(data, dict):
            data['seed'] = seed
        manifest = cls.from_dict(data)
        logger.info(f"Loaded manifest {file_path}: {manifest.experiment} with {len(manifest.specs)} specs")
        return manifest


def trace_oracle(spec: QuantizationSpec, t: int, prefactor: str = 'stationary',
                 spectrum: Optional[SpectrumData] = None) -> Dict[str, Any]:
    """Periodic-orbit trace against the exact tr Û^t from the eigenangles"""
    spectrum = spectrum if spectrum is not None else compute_spectrum(spec)
    exact = complex(np.exp(1j * t * spectrum.angles).sum())
    approx = trace_po(spec.family, spec.A, t, spec.N, theta=spec.theta,
                      alpha=spec.resolved_alpha(), prefactor=prefactor).value
    error = abs(approx - exact)
    return {
        't': t,
        'trace_po_real': approx.real, 'trace_po_imag': approx.imag,
        'exact_real': exact.real, 'exact_imag': exact.imag,
        'abs_error': error,
        'rel_error': error / abs(exact) if abs(exact) > 1e-12 else np.nan,
    }


@dataclass
class RunResult:
    manifest: ExperimentManifest
    tables: Dict[str, pd.DataFrame]
    summary: Dict[str, Any]
    files: List[Path] = field(default_factory=list)


Handler = Callable[[ExperimentManifest], Tuple[Dict[str, pd.DataFrame], Dict[str, Any]]]


class ExperimentRunner:
    """Dispatches manifests to registered experiment handlers"""

    def __init__(self, cache: Optional[SpectrumCache] = None, jobs: Optional[int] = None):
        self.cache = cache or SpectrumCache()
        self.jobs = jobs or config.get('runner.jobs')
        self.handlers: Dict[str, Handler] = {}
        self._setup_default_handlers()
        logger.info(f"ExperimentRunner initialized ({len(self.handlers)} experiments, jobs={self.jobs})")

    def _setup_default_handlers(self):
        for name in EXPERIMENTS:
            self.register(name, getattr(self, '_run_' + name.replace('-', '_')))

    def register(self, name: str, handler: Handler):
        """Add or replace the handler for an experiment"""
        self.handlers[name] = handler
        logger.debug(f"Registered experiment handler: {name}")

    def get_status(self) -> Dict[str, Any]:
        return {'experiments': sorted(self.handlers), 'jobs': self.jobs,
                'cache': self.cache.get_statistics()}

    def _map(self, fn: Callable[[Spec], List[Dict[str, Any]]], specs: Sequence[Spec],
             desc: str) -> List[Dict[str, Any]]:
        """Apply fn per spec; a failing spec yields one error row and the run continues"""
        def guarded(spec):
            try:
                return fn(spec)
            except Exception as e:
                logger.error(f"Error in {desc} for {group_label(spec)} N={spec.N}: {e}")
                return [{**spec_columns(spec), 'error': str(e)}]

        iterator = tqdm(specs, desc=desc, disable=len(specs) < 2 or self.jobs != 1)
        results = Parallel(n_jobs=self.jobs, prefer='threads')(delayed(guarded)(s) for s in iterator)
        return [row for rows in results for row in rows]

    def _check_output(self, output_dir: Path):
        try:
            ensure_directory(output_dir)
        except OSError as e:
            raise ManifestError(f"Cannot create output directory {output_dir}: {e}") from e
        if not os.access(output_dir, os.W_OK):
            raise ManifestError(f"Output directory is not writable: {output_dir}")

    def run(self, manifest: ExperimentManifest) -> RunResult:
        """Execute a manifest and write its tables and summary

        Returns:
            RunResult with the tables, the summary record and the files written
        """
        manifest.validate()
        handler = self.handlers.get(manifest.experiment)
        if handler is None:
            raise ManifestError(f"No handler registered for {manifest.experiment}")
        self._check_output(manifest.output_dir)

        logger.info(f"Running {manifest.name}: {manifest.experiment} over {len(manifest.specs)} specs")
        hits, misses = self.cache.hits, self.cache.misses
        started = get_timestamp()
        tables, details = handler(manifest)

        files = [write_csv(frame, manifest.output_dir / f"{manifest.name}_{name}.csv")
                 for name, frame in sorted(tables.items())]
        errors = sum(int(frame['error'].astype(str).str.len().gt(0).sum())
                     for frame in tables.values() if 'error' in frame.columns)
        summary = {
            'experiment': manifest.experiment,
            'name': manifest.name,
            'seed': manifest.seed,
            'specs': len(manifest.specs),
            'errors': errors,
            'params': manifest.params,
            'cache_hits': self.cache.hits - hits,
            'cache_misses': self.cache.misses - misses,
            'started': format_timestamp(started),
            'elapsed_seconds': round(get_timestamp() - started, 3),
            'tables': sorted(tables),
            'results': details,
        }
        summary_path = manifest.output_dir / f"{manifest.name}_summary.json"
        if safe_json_save(summary, summary_path):
            files.append(summary_path)
        logger.info(f"Finished {manifest.name}: {len(files)} files, {errors} failed rows")
        return RunResult(manifest=manifest, tables=tables, summary=summary, files=files)

    # --- experiment handlers ---

    def _run_gapratio_scan(self, manifest: ExperimentManifest):
        sectors = bool(manifest.params.get('sectors', False))

        def row(spec):
            record = spec_columns(spec)
            with_vectors = sectors and isinstance(spec, QuantizationSpec)
            spectrum = self.cache.get(spec, with_vectors=with_vectors)
            record['mean_gap_ratio'] = mean_gap_ratio(spectrum)
            if with_vectors:
                classes = classify_eigenvectors(spectrum, classification_operator(spec))
                stats = split_statistics(spectrum, classes)
                record['gap_ratio_plus'] = stats[1].mean_gap_ratio if 1 in stats else np.nan
                record['gap_ratio_minus'] = stats[-1].mean_gap_ratio if -1 in stats else np.nan
                record['mse'] = classes.mse
            record['error'] = ''
            return [record]

        table = _sorted(self._map(row, manifest.specs, 'gap ratios'))
        good = _succeeded(table, ('group', 'mean_gap_ratio'))
        groups = {g: float(v) for g, v in good.groupby('group')['mean_gap_ratio'].mean().items()}
        return {'gap_ratios': table}, {'group_means': groups, 'references': dict(RMT_GAP_RATIOS)}

    def _run_spacing_hist(self, manifest: ExperimentManifest):
        params = manifest.params
        bins = params.get('bins')
        value_range = params.get('range')
        pooled: Dict[str, List[np.ndarray]] = {}

        def row(spec):
            gaps = spacings(self.cache.get(spec)).spacings
            return [{**spec_columns(spec), 'spacings': gaps, 'error': ''}]

        rows = self._map(row, manifest.specs, 'spacings')
        for record in sorted(rows, key=lambda r: (r['group'], r['N'], r['key'])):
            if not record['error']:
                pooled.setdefault(record['group'], []).append(record['spacings'])

        frames = []
        for group, parts in sorted(pooled.items()):
            frame = histogram(SpacingData(np.concatenate(parts), True), bins=bins, value_range=value_range)
            frame.insert(0, 'group', group)
            frames.append(frame)
        hist = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()

        grid = hist['bin_center'].drop_duplicates().to_numpy() if not hist.empty else np.linspace(0.04, 3.96, 50)
        kinds = list(params.get('references', ['Poisson', 'GOE', 'GUE', 'TwoBlockGOESurmise']))
        if params.get('overlay', False) and 'TwoBlockGOE' not in kinds:
            kinds.append('TwoBlockGOE')
        references = pd.DataFrame({'s': grid})
        for kind in kinds:
            options = {}
            if kind == 'TwoBlockGOE':
                options = {'seed': manifest.seed, 'samples': params.get('overlay_samples'),
                           'dim': params.get('overlay_dim')}
            references[kind] = reference_curves(kind, grid, **options)['density'].to_numpy()

        failed = [{k: v for k, v in r.items() if k != 'spacings'} for r in rows if r['error']]
        tables = {'histogram': hist, 'references': references}
        if failed:
            tables['errors'] = _sorted(failed)
        return tables, {'groups': {g: int(sum(p.size for p in parts)) for g, parts in pooled.items()}}

    def _run_sff(self, manifest: ExperimentManifest):
        params = manifest.params
        series_frames: List[pd.DataFrame] = []

        def row(spec):
            spectrum = self.cache.get(spec)
            ell = params.get('ell') or default_ell(spec.N)
            f = params.get('fit_points') or default_fit_points(spec.N)
            T = max(int(params.get('T') or 0), f + ell)
            series = average_sff(sff(spectrum, T), ell)
            A = spec.A if isinstance(spec, QuantizationSpec) else None
            fit = fit_slope(series, f=f, threshold=params.get('residual_threshold'), A=A)
            frame = series.to_frame()
            frame['coe'] = coe_reference(frame['tau'])
            frame['two_block'] = two_block_reference(frame['tau'])
            for k, v in reversed(list(spec_columns(spec).items())):
                frame.insert(0, k, v)
            series_frames.append(frame)
            return [{**spec_columns(spec), 'slope': fit.slope, 'residual': fit.scaled_residual,
                     'f': fit.f, 'ell': ell, 'outlier': fit.is_outlier, 'error': ''}]

        fits = _sorted(self._map(row, manifest.specs, 'sff'))
        series = pd.concat(series_frames, ignore_index=True) if series_frames else pd.DataFrame()
        series = _sorted(series.to_dict('records'), extra=('t',)) if not series.empty else series
        good = _succeeded(fits, ('group', 'slope', 'outlier'))
        summary = {g: {'mean_slope': float(df['slope'].mean()),
                       'outliers': int(df['outlier'].sum()), 'count': int(len(df))}
                   for g, df in good.groupby('group')}
        return {'fits': fits, 'series': series}, {'groups': summary}

    def _run_slope_scan(self, manifest: ExperimentManifest):
        groups: Dict[str, List[QuantizationSpec]] = {}
        for spec in manifest.specs:
            groups.setdefault(group_label(spec), []).append(spec)

        frames, summary = [], {}
        for label, specs in sorted(groups.items()):
            table = slope_scan(specs, manifest.params, source=self.cache.get, jobs=self.jobs)
            by_n = {s.N: s for s in specs}
            table.insert(0, 'group', label)
            table['key'] = [spec_key(by_n[n]) for n in table['N']]
            table['slope_class'] = [slope_class(by_n[n].family, by_n[n].A, by_n[n].resolved_alpha())
                                    for n in table['N']]
            frames.append(table)
            kept = table[~table['outlier']]
            summary[label] = {
                'count': int(len(table)),
                'outlier_fraction': float(table['outlier'].mean()),
                'mean_smoothed_slope': float(kept['smoothed'].mean()) if len(kept) else None,
                'slope_class': table['slope_class'].iloc[0],
            }
        return {'slopes': _sorted(pd.concat(frames, ignore_index=True).to_dict('records'))}, {'groups': summary}

    def _run_persistence(self, manifest: ExperimentManifest):
        params = manifest.params
        curves: Dict[str, List] = {}
        series_frames: List[pd.DataFrame] = []

        def row(spec):
            spectrum = self.cache.get(spec)
            curve = persistence(spectrum, params.get('T'), c=params.get('c'))
            verdict = cyc_ergodicity_check(curve, c=params.get('c'), epsilon=params.get('epsilon'),
                                           kappa=params.get('kappa'), window=params.get('ratio_window'))
            frame = curve.to_frame()
            frame.insert(0, 'key', spec_key(spec))
            frame.insert(0, 'group', group_label(spec))
            frame.insert(2, 'N', spec.N)
            series_frames.append(frame)
            curves.setdefault(group_label(spec), []).append((spec.N, spec_key(spec), curve))
            record = {**spec_columns(spec), **verdict.to_record(), 'error': ''}
            record['delta_squared'] = delta_squared(sff(spectrum, max(1, spec.N // 2)))
            return [record]

        verdicts = _sorted(self._map(row, manifest.specs, 'persistence'))
        averaged_frames, summary = [], {}
        for group, members in sorted(curves.items()):
            ordered = [c for _, _, c in sorted(members, key=lambda m: (m[0], m[1]))]
            averaged = persistence_average(ordered)
            frame = averaged.to_frame()
            frame.insert(0, 'group', group)
            averaged_frames.append(frame)
            summary[group] = {'members': list(averaged.members),
                              'mean_coe_ratio': averaged.mean_coe_ratio(params.get('ratio_window'))}

        tables = {'verdicts': verdicts}
        if series_frames:
            tables['series'] = _sorted(pd.concat(series_frames, ignore_index=True).to_dict('records'), extra=('t',))
            tables['averaged'] = pd.concat(averaged_frames, ignore_index=True)
        return tables, {'groups': summary}

    def _run_commutator_scan(self, manifest: ExperimentManifest):
        params = manifest.params
        classify = bool(params.get('classify', True))
        heatmaps: List[pd.DataFrame] = []

        def row(spec):
            U = build_map(spec)
            scan = fourier_reflection_scan(U, params.get('grid'))
            best = scan.loc[scan['defect'].idxmin()]
            record = {**spec_columns(spec),
                      'tr_defect': tr_defect(spec, U),
                      'reflection_defect': reflection_defect(U, reflection_operator(spec.N)),
                      'min_scan_defect': float(best['defect']),
                      'min_omega1': float(best['omega1']), 'min_omega2': float(best['omega2'])}
            if classify:
                classes = classify_eigenvectors(self.cache.get(spec, with_vectors=True),
                                                classification_operator(spec))
                record.update({'plus': int(classes.plus.size), 'minus': int(classes.minus.size),
                               'mse': classes.mse, 'cluster_fraction': classes.cluster_fraction(),
                               'max_imaginary': classes.max_imaginary})
            scan.insert(0, 'key', spec_key(spec))
            scan.insert(0, 'group', group_label(spec))
            scan.insert(2, 'N', spec.N)
            heatmaps.append(scan)
            record['error'] = ''
            return [record]

        tables = {'defects': _sorted(self._map(row, manifest.specs, 'commutators'))}
        if heatmaps:
            tables['heatmap'] = _sorted(pd.concat(heatmaps, ignore_index=True).to_dict('records'),
                                        extra=('omega1', 'omega2'))

        structures = []
        for A, N in params.get('structure', []):
            s = bv_commutator_structure(int(A), int(N))
            structures.append({'A': s.A, 'N': s.N, 'zero_row_max': s.zero_row_max,
                               'max_small_entry': s.max_small_entry, 'largest_entry': s.largest_entry,
                               'largest_x': s.largest_position[0], 'largest_y': s.largest_position[1],
                               'large_entries': len(s.large_entry_positions),
                               'max_large_row_distance': s.max_large_row_distance, 'passes': s.passes()})
        if structures:
            tables['structure'] = pd.DataFrame(structures)
        return tables, {'structure_checks': len(structures)}

    def _run_husimi(self, manifest: ExperimentManifest):
        params = manifest.params
        indices = [int(i) for i in params.get('eigenvectors', [0])]
        grids: List[pd.DataFrame] = []

        def row(spec):
            spectrum = self.cache.get(spec, with_vectors=True)
            records = []
            for index in indices:
                grid = husimi(spectrum.eigenvectors[:, index], params.get('resolution'),
                              theta=spec.theta, sigma=params.get('sigma'))
                values = grid.values
                q_star, p_star = grid.argmax_point()
                frame = grid.to_frame()
                frame.insert(0, 'eigenvector', index)
                frame.insert(0, 'key', spec_key(spec))
                frame.insert(0, 'group', group_label(spec))
                frame.insert(3, 'N', spec.N)
                grids.append(frame)
                records.append({
                    **spec_columns(spec), 'eigenvector': index, 'angle': float(spectrum.angles[index]),
                    'argmax_q': q_star, 'argmax_p': p_star,
                    'point_reflection_l1': float(np.abs(values - grid.point_reflected()).sum() / values.sum()),
                    'transpose_l1': float(np.abs(values - values.T).sum() / values.sum())
                    if values.shape[0] == values.shape[1] else np.nan,
                    'error': '',
                })
            return records

        tables = {'summary': _sorted(self._map(row, manifest.specs, 'husimi'), extra=('eigenvector',))}
        if grids:
            tables['grids'] = _sorted(pd.concat(grids, ignore_index=True).to_dict('records'),
                                      extra=('eigenvector', 'q', 'p'))
        return tables, {'eigenvectors': indices}

    def _run_interpolation(self, manifest: ExperimentManifest):
        params = manifest.params
        specs = manifest.specs
        if 't_values' in params:
            specs = [replace(spec, t_interp=float(t)) for spec in specs for t in _values(params['t_values'])]

        def row(spec):
            spectrum = self.cache.get(spec)
            _, fit = analyze_spectrum(spectrum, ell=params.get('ell'), f=params.get('fit_points'))
            return [{**spec_columns(spec), 'mean_gap_ratio': mean_gap_ratio(spectrum),
                     'slope': fit.slope, 'residual': fit.scaled_residual, 'error': ''}]

        table = _sorted(self._map(row, specs, 'interpolation'), extra=('t_interp', 'seed'))
        good = _succeeded(table, ('kind', 't_interp', 'mean_gap_ratio', 'slope'))
        curve = good.groupby(['kind', 't_interp'])[['mean_gap_ratio', 'slope']].mean().reset_index()
        return {'points': table, 'curve': curve}, {'points': int(len(table))}

    def _run_orbit_check(self, manifest: ExperimentManifest):
        params = manifest.params
        times = [int(t) for t in _values(params.get('times', [1, 2, 3]))]
        prefactor = params.get('prefactor', 'stationary')

        def row(spec):
            spectrum = self.cache.get(spec)
            alpha = spec.resolved_alpha()
            records = []
            for t in times:
                records.append({**spec_columns(spec), **trace_oracle(spec, t, prefactor, spectrum),
                                'diag_sff': diag_sff_prediction(spec.family, spec.A, t, spec.N, alpha),
                                'error': ''})
            return records

        table = _sorted(self._map(row, manifest.specs, 'orbit check'), extra=('t',))
        classes = {}
        for spec in manifest.specs:
            alpha = spec.resolved_alpha()
            label = group_label(spec) + (f"_s{spec.seed}" if spec.random_alpha else "")
            classes[label] = {
                'slope_class': slope_class(spec.family, spec.A, alpha),
                'diag_time_average': diag_time_average(spec.family, spec.A, alpha),
            }
        return {'traces': table}, {'groups': classes, 'prefactor': prefactor}

    def _run_phase_sweep(self, manifest: ExperimentManifest):
        params = manifest.params
        phases = [float(p) for p in _values(params.get('phases', {'start': 0.0, 'stop': 1.0, 'step': 0.05}))]
        swept = []
        for spec in manifest.specs:
            index = int(params.get('index', spec.A - 1))
            if not 0 <= index < spec.A:
                raise ManifestError(f"Phase index {index} out of range for A={spec.A}")
            base = np.asarray(params.get('base_alpha', np.zeros(spec.A)), dtype=np.float64)
            for value in phases:
                alpha = base.copy()
                alpha[index] = value
                swept.append((spec.with_alpha(alpha), index, value))
        phase_of = {spec_key(s): (i, v) for s, i, v in swept}

        def row(spec):
            index, value = phase_of[spec_key(spec)]
            spectrum = self.cache.get(spec)
            _, fit = analyze_spectrum(spectrum, A=spec.A, ell=params.get('ell'), f=params.get('fit_points'))
            return [{**spec_columns(spec), 'phase_index': index, 'phase': value,
                     'mean_gap_ratio': mean_gap_ratio(spectrum), 'slope': fit.slope,
                     'outlier': fit.is_outlier,
                     'slope_class': slope_class(spec.family, spec.A, spec.resolved_alpha()),
                     'error': ''}]

        table = _sorted(self._map(row, [s for s, _, _ in swept], 'phase sweep'), extra=('phase',))
        table = table.sort_values(['N', 'phase_index', 'phase'], kind='stable').reset_index(drop=True)
        return {'sweep': table}, {'phases': len(phases)}


def run(manifest: Union[ExperimentManifest, str, Path], cache_dir: Optional[Union[str, Path]] = None,
        jobs: Optional[int] = None) -> RunResult:
    """Load (if needed) and execute a manifest with a fresh runner"""
    if not isinstance(manifest, ExperimentManifest):
        manifest = ExperimentManifest.load(manifest)
    runner = ExperimentRunner(cache=SpectrumCache(cache_dir), jobs=jobs)
    return runner.run(manifest)
