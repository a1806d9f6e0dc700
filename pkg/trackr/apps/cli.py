"""trackr.apps.cli

The ``trackr`` command line tool::

    trackr simulate scenario.json --out seq/ [--downsample 2]
    trackr track --config run.json [--out runs/a] [--threads 4]
    trackr evaluate runs/a --gt seq/manifest.json
    trackr features seq/manifest.json --config tracker.json --out fmaps/ [--roi x,y,w,h]
    trackr register seq/manifest.json --out reg/
    trackr sweep --config run.json --kind overlap --values 1,2,3,4

Exit codes: 0 on success, 2 for invalid configuration or input
descriptions, 3 for bad or missing data. Log verbosity is set with the
``TRACKR_LOGLEVEL`` environment variable.
"""
import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Any, Callable, Dict, List, Optional, Sequence

import pandas as pd

from .. import log as trackrlog
from ..data.formats import FormatError
from ..data.manifest import ManifestError, load_manifest
from ..eval.metrics import (
    Timing, Trajectory, load_trajectories, read_ground_truth_trajectory, report, write_report,
)
from ..eval.plotting import save_precision_plot
from ..features.encoders import FeatureConfig
from ..features.fhog import FeatureError
from ..registration.homography import DegeneracyError
from ..registration.ransac import EstimationError
from ..registration.registrar import RegistrationConfig, RegistrationMode
from ..sim.generator import generate, write_downsampled
from ..sim.scenario import SpecError, load_scenario
from ..tracker.sources import IngestionError
from ..utils.misc import ConfigError, ContractViolation
from .pipeline import (
    dump_features, load_run_config, parse_roi, register_sequence, run_tracking,
)
from .sweeps import overlap_sweep, roi_size_sweep

__license__ = 'MIT'

logger = trackrlog.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

CONFIG_ERRORS = (ConfigError, SpecError, ManifestError)
DATA_ERRORS = (FormatError, IngestionError, ContractViolation, EstimationError,
               FeatureError, DegeneracyError, OSError)


def _read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})")


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip() != '']
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got '{text}'.")


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = load_scenario(args.scenario)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    out = args.out or os.path.splitext(os.path.basename(args.scenario))[0]
    with ThreadPoolExecutor(max_workers=args.threads or None) as ex:
        manifest = generate(spec, out, ex)
    if args.downsample is not None and args.downsample > 1:
        write_downsampled(manifest, args.downsample, out)
    return EXIT_OK


def cmd_track(args: argparse.Namespace) -> int:
    run = load_run_config(args.config)
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.threads is not None:
        overrides['threads'] = args.threads
    if args.out is not None:
        overrides['out_dir'] = args.out
    if args.registration is not None:
        overrides['registration'] = RegistrationMode.parse(args.registration)
    run_tracking(replace(run, **overrides))
    return EXIT_OK


def _ground_truth(paths: Sequence[str]) -> Dict[str, Trajectory]:
    gts: Dict[str, Trajectory] = {}
    for p in paths:
        if p.endswith('.json'):
            for tid, csv in load_manifest(p).ground_truth_paths().items():
                gts[tid] = read_ground_truth_trajectory(csv, tid)
        else:
            stem = os.path.splitext(os.path.basename(p))[0]
            tid = stem[3:] if stem.startswith('gt_') else stem
            gts[tid] = read_ground_truth_trajectory(p, tid)
    return gts


def cmd_evaluate(args: argparse.Namespace) -> int:
    trajs = load_trajectories(args.trajectories)
    gts = _ground_truth(args.gt)
    timing = None
    timing_path = os.path.join(args.trajectories, 'timing.csv')
    if os.path.exists(timing_path):
        timing = Timing.from_log(pd.read_csv(timing_path))
    rep = report(trajs, gts, timing)
    out = args.out or args.trajectories
    write_report(rep, out)
    save_precision_plot(rep, out)
    return EXIT_OK


def cmd_features(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    d = _read_json(args.config).get('features', {}) if args.config else {}
    if args.kind is not None:
        d = {**d, 'kind': args.kind}
    cfg = FeatureConfig.from_dict(d)
    roi = parse_roi(args.roi) if args.roi else None
    dump_features(manifest, cfg, args.out or 'features', roi=roi, rgb=args.rgb)
    return EXIT_OK


def cmd_register(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    doc = _read_json(args.config) if args.config else {}
    cfg = RegistrationConfig.from_dict(doc.get('registration'), seed=args.seed or 0)
    subset = FeatureConfig.from_dict(doc.get('features')).channel_subset
    register_sequence(manifest, cfg, args.out or 'registration', subset)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    run = load_run_config(args.config)
    if args.out is not None:
        run = replace(run, out_dir=args.out)
    if args.threads is not None:
        run = replace(run, threads=args.threads)
    values = _ints(args.values) if args.values else None
    if args.kind == 'overlap':
        table = overlap_sweep(run, values)
    else:
        if values is None:
            raise ConfigError("a full-ROI sweep needs --values.")
        table = roi_size_sweep(run, values, args.stride)
    os.makedirs(run.out_dir, exist_ok=True)
    table.to_csv(os.path.join(run.out_dir, f'sweep_{args.kind}.csv'), index=False)
    return EXIT_OK


def _common(p: argparse.ArgumentParser, config_help: Optional[str] = None,
            config_required: bool = False) -> None:
    if config_help is not None:
        p.add_argument('--config', required=config_required, help=config_help)
    p.add_argument('--seed', type=int, default=None, help='random seed')
    p.add_argument('--threads', type=int, default=None,
                   help='worker threads (0: one per CPU)')
    p.add_argument('--out', default=None, help='output directory')


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='trackr', description='trackr -- multi-ROI correlation filter tracking.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', help='render a synthetic sequence')
    p.add_argument('scenario', help='scenario JSON')
    p.add_argument('--downsample', type=int, default=None,
                   help='also write a manifest keeping every N-th frame')
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('track', help='track the targets of a sequence')
    _common(p, 'run config JSON', config_required=True)
    p.add_argument('--registration', default=None,
                   choices=[m.label for m in RegistrationMode])
    p.set_defaults(func=cmd_track)

    p = sub.add_parser('evaluate', help='score trajectories against ground truth')
    p.add_argument('trajectories', help='folder with trajectory_<id>.csv files')
    p.add_argument('--gt', nargs='+', required=True,
                   help='manifest JSON or ground-truth CSV file(s)')
    _common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser('features', help='write per-frame feature maps')
    p.add_argument('manifest')
    p.add_argument('--kind', default=None, help='feature kind, overrides the config')
    p.add_argument('--roi', default=None, help='x,y,w,h crop of every frame')
    p.add_argument('--rgb', action='store_true', help='also write the RGB planes as PNG')
    _common(p, 'tracker config JSON (features section)')
    p.set_defaults(func=cmd_features)

    p = sub.add_parser('register', help='estimate frame-to-canonical homographies')
    p.add_argument('manifest')
    _common(p, 'tracker config JSON (registration and features sections)')
    p.set_defaults(func=cmd_register)

    p = sub.add_parser('sweep', help='repeat a run over grid settings')
    p.add_argument('--kind', choices=['overlap', 'roi-size'], default='overlap')
    p.add_argument('--values', default=None,
                   help='grid_n values (overlap) or full ROI sizes (roi-size)')
    p.add_argument('--stride', type=int, default=None, help='ROI stride for roi-size')
    _common(p, 'run config JSON', config_required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except CONFIG_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_CONFIG
    except DATA_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_DATA


def script() -> None:
    trackrlog.enableStreamHandler(True)
    sys.exit(main())
