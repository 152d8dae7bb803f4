"""Command-line interface: one program, one subcommand per capability."""

import argparse
import contextlib
import json
import logging
import sys
from pathlib import Path
from typing import Iterator, List, Optional

from .augment.dssim import DSSIM_MODES
from .core.config import FusionConfig
from .core.spectral import BASIS_VARIANTS
from .data.defaults import DEFAULT_FEATHER, DEFAULT_SCALE_RANGES, DEFAULT_THRESHOLD, GRADCHECK_CONFIG
from .errors import ConfigurationError, FusionError, GradientCheckFailure, UsageError
from .io.readers import load_config
from .io.writers import dump_json, staged_directory
from .main import (
    evaluate_score_file,
    run_ablation,
    run_attention,
    run_augmentation,
    run_batch_augmentation,
    run_dssim,
    run_gradcheck_suite,
    run_toy_training,
    summarize_tensor,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
RUN_LOG = 'run.log'


class ArgumentParser(argparse.ArgumentParser):
    """Parser that raises UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(f'{self.prog}: {message}')


def setup_logging(level: int = logging.INFO) -> logging.Logger:
    """Log to stderr; stdout stays reserved for JSON."""
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=[logging.StreamHandler(sys.stderr)], force=True)
    return logging.getLogger('dual_domain_fusion')


@contextlib.contextmanager
def file_logging(log_file: Path) -> Iterator[None]:
    """Copy log records into ``log_file`` while the block runs."""
    handler = logging.FileHandler(log_file)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root = logging.getLogger()
    root.addHandler(handler)
    try:
        yield
    finally:
        root.removeHandler(handler)
        handler.close()


def _scales(text: str):
    try:
        ranges = json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f'--scales must be JSON such as [[40,80],[224,224]]: {exc}')
    if not isinstance(ranges, list) or not all(isinstance(r, list) and len(r) == 2 for r in ranges):
        raise argparse.ArgumentTypeError('--scales must be a list of [lo, hi] pairs')
    return ranges


def get_parser() -> argparse.ArgumentParser:
    """Create command line argument parser."""
    parser = ArgumentParser(
        prog='dual_domain_fusion',
        description='Dual-domain attention, wave-token superposition and swap augmentation for face forgery detection',
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true', help='Log at DEBUG level')
    verbosity.add_argument('--quiet', action='store_true', help='Log warnings and errors only')
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=ArgumentParser)

    augment = subparsers.add_parser('augment', help='Paste the most dissimilar window of a fake onto its source')
    augment.add_argument('--fake', type=Path, help='Fake image (PPM P6 or PNG)')
    augment.add_argument('--source', type=Path, help='Source image with the same extents')
    augment.add_argument('--out', type=Path, help='Output image path (.png or .ppm)')
    augment.add_argument('--pairs', type=Path, help='JSON-lines file of {fake, source, out} records')
    augment.add_argument('--seed', type=int, default=0, help='Seed (pair i of --pairs uses seed ^ i)')
    augment.add_argument(
        '--scales', type=_scales, default=None, help=f'Window scale ranges as JSON (default: {DEFAULT_SCALE_RANGES})'
    )
    augment.add_argument('--feather', type=float, default=DEFAULT_FEATHER, help='Mask feather radius in pixels')
    augment.add_argument('--dssim-mode', choices=DSSIM_MODES, default='standard', help='Dissimilarity formula')
    augment.add_argument('--manifest', type=Path, help='Manifest JSON-lines output (default: next to --out)')
    augment.add_argument('--max-workers', type=int, default=None, help='Worker threads for --pairs')

    dssim = subparsers.add_parser('dssim', help='Write the dissimilarity map of two images')
    dssim.add_argument('--a', type=Path, required=True, help='First image')
    dssim.add_argument('--b', type=Path, required=True, help='Second image')
    dssim.add_argument('--out', type=Path, required=True, help='Output D2FT map')
    dssim.add_argument('--mode', choices=DSSIM_MODES, default='standard', help='Dissimilarity formula')

    attend = subparsers.add_parser('attend', help='Run both attention blocks and the superposition head')
    attend.add_argument('--features', type=Path, required=True, help='C x H x W D2FT feature map')
    attend.add_argument('--config', type=Path, help='JSON config')
    attend.add_argument('--out-bi', type=Path, required=True, help='Output X_bi')
    attend.add_argument('--out-sp', type=Path, required=True, help='Output X_sp')
    attend.add_argument('--out-p', type=Path, required=True, help='Output P')
    attend.add_argument('--seed', type=int, default=None, help='Weight initialization seed')
    attend.add_argument('--basis-variant', choices=BASIS_VARIANTS, default=None, help='DCT basis variant')
    attend.add_argument('--checkpoint', type=Path, help='Checkpoint directory with trained weights')

    gradcheck = subparsers.add_parser('gradcheck', help='Finite-difference checks of every block')
    gradcheck.add_argument('--config', type=Path, help='JSON config (default: a small 4x8x8 config)')
    gradcheck.add_argument('--seed', type=int, default=0, help='Seed of inputs and weights')

    train = subparsers.add_parser('train-toy', help='Train on the synthetic dataset')
    train.add_argument('--config', type=Path, help='JSON config')
    train.add_argument('--out', type=Path, required=True, help='Output directory')
    train.add_argument('--seed', type=int, default=None, help='Override the config seed')
    train.add_argument('--epochs', type=int, default=None, help='Override the config epochs')
    train.add_argument('--lr', type=float, default=None, help='Override the config learning rate')
    train.add_argument('--samples', type=int, default=None, help='Override the config sample count')

    ablate = subparsers.add_parser('ablate', help='Train every on/off combination of the three components')
    ablate.add_argument('--config', type=Path, help='JSON config')
    ablate.add_argument('--out', type=Path, required=True, help='Output directory')
    ablate.add_argument('--seed', type=int, default=None, help='Override the config seed')
    ablate.add_argument('--epochs', type=int, default=None, help='Override the config epochs')

    metrics = subparsers.add_parser('metrics', help='Metrics of a score,label CSV')
    metrics.add_argument('--scores', type=Path, required=True, help='CSV with header score,label')
    metrics.add_argument('--threshold', type=float, default=DEFAULT_THRESHOLD, help='Decision threshold')

    inspect = subparsers.add_parser('inspect', help='Shape and statistics of a D2FT file')
    inspect.add_argument('--file', type=Path, required=True, help='D2FT tensor file')

    return parser


def resolve_config(path: Optional[Path], defaults: Optional[dict] = None, **overrides) -> FusionConfig:
    """Flag > config file > built-in default."""
    config = load_config(path) if path is not None else FusionConfig.from_dict(defaults or {})
    return config.with_overrides(**overrides)


def _require_paths(*paths: Path) -> None:
    for path in paths:
        if not Path(path).exists():
            raise FileNotFoundError(f'File does not exist: {path}')


def _augment(args) -> dict:
    if args.pairs is not None:
        if args.fake or args.source or args.out:
            raise UsageError('augment: --pairs cannot be combined with --fake/--source/--out')
        if args.manifest is None:
            raise UsageError('augment: --pairs requires --manifest')
        _require_paths(args.pairs)
        records = run_batch_augmentation(
            args.pairs, args.manifest, args.seed, args.scales, args.feather, args.dssim_mode, args.max_workers
        )
        return {'manifest': str(args.manifest), 'pairs': records}
    if not (args.fake and args.source and args.out):
        raise UsageError('augment: --fake, --source and --out are required')
    _require_paths(args.fake, args.source)
    return run_augmentation(
        args.fake, args.source, args.out, args.seed, args.scales, args.feather, args.dssim_mode, args.manifest
    )


def _gradcheck(args) -> dict:
    cfg = resolve_config(args.config, GRADCHECK_CONFIG)
    result = run_gradcheck_suite(cfg, args.seed)
    print(dump_json(result), end='')
    if not result['passed']:
        failing = {k: v for k, v in result['modules'].items() if v >= result['tolerance']}
        raise GradientCheckFailure(f'Gradient check above tolerance {result["tolerance"]}: {failing}')
    return None


def _train_toy(args) -> dict:
    cfg = resolve_config(args.config, seed=args.seed, epochs=args.epochs, lr=args.lr, samples=args.samples)
    cfg.validate_toy()
    with staged_directory(args.out) as staging, file_logging(staging / RUN_LOG):
        return run_toy_training(cfg, staging)


def _ablate(args) -> dict:
    cfg = resolve_config(args.config, seed=args.seed, epochs=args.epochs)
    cfg.validate_toy()
    with staged_directory(args.out) as staging, file_logging(staging / RUN_LOG):
        payload = run_ablation(cfg, staging)
    return {**payload, 'out': str(args.out)}


def dispatch(args) -> Optional[dict]:
    """Run the selected subcommand and return its JSON payload."""
    if args.command == 'augment':
        return _augment(args)
    if args.command == 'dssim':
        _require_paths(args.a, args.b)
        return run_dssim(args.a, args.b, args.out, args.mode)
    if args.command == 'attend':
        _require_paths(args.features)
        cfg = resolve_config(args.config, seed=args.seed, basis_variant=args.basis_variant)
        return run_attention(args.features, cfg, args.out_bi, args.out_sp, args.out_p, args.checkpoint)
    if args.command == 'gradcheck':
        return _gradcheck(args)
    if args.command == 'train-toy':
        return _train_toy(args)
    if args.command == 'ablate':
        return _ablate(args)
    if args.command == 'metrics':
        _require_paths(args.scores)
        return evaluate_score_file(args.scores, args.threshold)
    if args.command == 'inspect':
        _require_paths(args.file)
        return summarize_tensor(args.file)
    raise UsageError(f'Unknown command {args.command}')


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run one subcommand and map failures to exit codes.

    Returns
    -------
    int
        0 success, 1 usage, 2 I/O or format, 3 contract violation, 4 acceptance failure
    """
    parser = get_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return exc.exit_code
    except SystemExit as exc:
        # --help and --version
        return exc.code if isinstance(exc.code, int) else 0

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    setup_logging(level)

    try:
        payload = dispatch(args)
    except FusionError as exc:
        logger.error(f'{type(exc).__name__}: {exc}')
        return exc.exit_code
    except OSError as exc:
        logger.error(f'I/O error: {exc}')
        return 2
    except ValueError as exc:
        # stray numeric contract failures from third-party parsers
        logger.error(f'Invalid value: {exc}')
        return ConfigurationError.exit_code

    if payload is not None:
        print(dump_json(payload), end='')
    return 0
