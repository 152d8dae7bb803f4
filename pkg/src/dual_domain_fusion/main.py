"""Pipeline functions behind every command-line subcommand."""

import itertools
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .augment.dssim import SsimConstants, dssim_map
from .core.config import FusionConfig
from .core.fusion import FusionParams, ToyBackbone, bce_loss, fusion_forward, init_fusion_params
from .core.gradcheck import check_parameters, gradient_check
from .core.spatial import bidir_forward
from .core.spectral import spectral_forward
from .core.superposition import superposition_forward
from .core.tensor import Tensor, add, make_rng, total
from .core.training import extract_features, split_indices, train_toy
from .data.defaults import DEFAULT_FEATHER, DEFAULT_THRESHOLD
from .data.toy import make_toy_dataset
from .errors import ShapeError
from .io.readers import load_features, read_checkpoint, read_image, read_pairs, read_scores, read_tensor
from .io.writers import save_features, write_checkpoint, write_jsonl, write_scores, write_tensor
from .parallel.augment import augment_file_pair, parallel_augment_pairs
from .postprocessing.analysis import feature_separation
from .postprocessing.export import (
    export_ablation_csv,
    export_ablation_summary,
    export_metrics_json,
    export_training_history,
)
from .postprocessing.metrics import evaluate_scores

logger = logging.getLogger(__name__)

GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_EPS = 1e-5


def default_manifest_path(out: Path) -> Path:
    return Path(out).with_suffix('.jsonl')


def run_augmentation(
    fake: Path,
    source: Path,
    out: Path,
    seed: int = 0,
    scale_ranges: Optional[Sequence[Sequence[int]]] = None,
    feather: float = DEFAULT_FEATHER,
    mode: str = 'standard',
    manifest: Optional[Path] = None,
) -> Dict[str, Any]:
    """
    Augment one fake/source pair and write the image and its manifest line.

    Returns
    -------
    Dict[str, Any]
        The manifest record
    """
    record = augment_file_pair(
        Path(fake), Path(source), Path(out), seed, scale_ranges=scale_ranges, feather=feather, mode=mode
    )
    write_jsonl(manifest or default_manifest_path(out), [record])
    return record


def run_batch_augmentation(
    pairs_file: Path,
    manifest: Path,
    seed: int = 0,
    scale_ranges: Optional[Sequence[Sequence[int]]] = None,
    feather: float = DEFAULT_FEATHER,
    mode: str = 'standard',
    max_workers: Optional[int] = None,
) -> List[Dict[str, Any]]:
    """Augment every pair listed in a JSON-lines file; one manifest line per pair, in input order."""
    pairs = read_pairs(pairs_file)
    records = parallel_augment_pairs(
        pairs, seed, scale_ranges=scale_ranges, feather=feather, mode=mode, max_workers=max_workers
    )
    write_jsonl(manifest, records)
    return records


def run_dssim(a: Path, b: Path, out: Path, mode: str = 'standard') -> Dict[str, Any]:
    """Write the dissimilarity map of two images as a D2FT tensor."""
    values = dssim_map(read_image(a), read_image(b), SsimConstants(), mode=mode)
    write_tensor(out, values)
    return {'out': str(out), 'mode': mode, **describe_array(values)}


def load_params(cfg: FusionConfig, checkpoint: Optional[Path] = None) -> FusionParams:
    """Seeded initial weights, replaced by checkpoint values when a directory is given."""
    params = init_fusion_params(cfg)
    if checkpoint is None:
        return params
    arrays, _ = read_checkpoint(checkpoint)
    for name, parameter in params.by_name().items():
        if name not in arrays:
            raise ShapeError(f'Checkpoint {checkpoint} has no parameter {name}')
        if arrays[name].shape != parameter.shape:
            raise ShapeError(f'Checkpoint {name} has shape {arrays[name].shape}, expected {parameter.shape}')
        parameter.value = Tensor(arrays[name], requires_grad=True)
        parameter.zero_grad()
    return params


def run_attention(
    features: Path,
    cfg: FusionConfig,
    out_bi: Path,
    out_sp: Path,
    out_p: Path,
    checkpoint: Optional[Path] = None,
) -> Dict[str, Any]:
    """
    Run both attention blocks and the superposition head on a stored feature map.

    X_bi and X_sp are always written; P is computed from their sum.
    """
    x = load_features(features)
    if x.shape != (cfg.C, cfg.H, cfg.W):
        raise ShapeError(f'Features of shape {x.shape} do not match config {(cfg.C, cfg.H, cfg.W)}')
    params = load_params(cfg, checkpoint)
    x_bi, _ = bidir_forward(x, params.bidir)
    x_sp = spectral_forward(x, params.spectral)
    p = superposition_forward(add(x_bi, x_sp), params.wave)
    logit, _ = fusion_forward(x, cfg, params)
    for path, tensor in ((out_bi, x_bi), (out_sp, x_sp), (out_p, p)):
        save_features(path, tensor)
    logger.info(f'Wrote X_bi, X_sp and P of shape {x.shape}')
    return {
        'shape': list(x.shape),
        'logit': logit.item(),
        'out_bi': str(out_bi),
        'out_sp': str(out_sp),
        'out_p': str(out_p),
    }


def _worst(reports) -> float:
    return max(report.max_relative_error for _, report in reports)


def run_gradcheck_suite(cfg: FusionConfig, seed: int = 0, eps: float = GRADCHECK_EPS) -> Dict[str, Any]:
    """
    Finite-difference checks of each block and of the end-to-end loss.

    Each block is checked with respect to its input and every one of its
    parameters; the end-to-end loss with respect to all parameters.

    Returns
    -------
    Dict[str, Any]
        'modules' maps block name to the worst relative error; 'passed' is
        True when all lie below the tolerance
    """
    rng = make_rng(seed)
    params = init_fusion_params(cfg, seed=seed)
    x = Tensor(rng.uniform(-1.0, 1.0, size=(cfg.C, cfg.H, cfg.W)))
    label = int(rng.integers(0, 2))

    blocks = {
        'bidir': (lambda v: bidir_forward(v, params.bidir)[0], params.bidir.parameters()),
        'spectral': (lambda v: spectral_forward(v, params.spectral), params.spectral.parameters()),
        'superposition': (lambda v: superposition_forward(v, params.wave), params.wave.parameters()),
    }
    modules = {}
    for name, (block, parameters) in blocks.items():
        input_report = gradient_check(lambda v, block=block: total(block(v)), x, eps)
        parameter_reports = check_parameters(lambda block=block: total(block(x)), parameters, eps)
        modules[name] = max(input_report.max_relative_error, _worst(parameter_reports))
        logger.info(f'Gradient check {name}: max relative error {modules[name]:.3e}')

    end_to_end = check_parameters(
        lambda: bce_loss(fusion_forward(x, cfg, params)[0], label), params.all_parameters(), eps
    )
    modules['end_to_end'] = _worst(end_to_end)
    logger.info(f'Gradient check end_to_end: max relative error {modules["end_to_end"]:.3e}')

    return {
        'modules': modules,
        'tolerance': GRADCHECK_TOLERANCE,
        'eps': eps,
        'seed': seed,
        'passed': all(error < GRADCHECK_TOLERANCE for error in modules.values()),
    }


def _separation(dataset, held_idx: np.ndarray, cfg: FusionConfig, params: FusionParams) -> Dict[str, float]:
    backbone = ToyBackbone(cfg.C, seed=cfg.seed)
    real_idx = held_idx[dataset.labels[held_idx] == 0]
    real_idx = real_idx[real_idx + 1 < len(dataset)]
    real = extract_features(dataset.images[real_idx], backbone)
    fake = extract_features(dataset.images[real_idx + 1], backbone)
    return feature_separation(real, fake, cfg, params)


def run_toy_training(cfg: FusionConfig, output_dir: Path) -> Dict[str, Any]:
    """
    Train on a fresh toy dataset and write checkpoint, metrics, scores and history.

    Output layout: ``checkpoint/`` (D2FT files + manifest.json), ``metrics.json``,
    ``scores.csv`` and ``history.h5``. Nothing is written until training and
    the separation analysis have finished.
    """
    output_dir = Path(output_dir)
    dataset = make_toy_dataset(cfg.samples, cfg.image_size, cfg.seed)
    result = train_toy(cfg, dataset)

    _, held_idx = split_indices(len(dataset))
    payload = {
        'config': cfg.to_dict(),
        'heldout': result.report.to_dict(),
        'untrained': result.initial_report.to_dict(),
        'improved': result.report.auc > result.initial_report.auc,
        'final_epoch_loss': result.history.epoch_losses[-1] if result.history.epoch_losses else None,
        'steps': len(result.history.step_losses),
    }
    if cfg.use_superposition:
        payload['separation'] = _separation(dataset, held_idx, cfg, result.params)

    write_checkpoint(output_dir / 'checkpoint', result.params.all_parameters(), cfg.to_dict())
    write_scores(output_dir / 'scores.csv', result.scores)
    export_training_history(result.history, result.scores, cfg.to_dict(), output_dir)
    export_metrics_json(payload, output_dir)
    return payload


def run_ablation(cfg: FusionConfig, output_dir: Path) -> Dict[str, Any]:
    """Train every on/off combination of the three components on the same toy dataset."""
    output_dir = Path(output_dir)
    dataset = make_toy_dataset(cfg.samples, cfg.image_size, cfg.seed)
    rows = []
    for use_bidir, use_spectral, use_superposition in itertools.product([True, False], repeat=3):
        variant = cfg.with_overrides(
            use_bidir=use_bidir, use_spectral=use_spectral, use_superposition=use_superposition
        )
        logger.info(f'Ablation run bidir={use_bidir} spectral={use_spectral} superposition={use_superposition}')
        report = train_toy(variant, dataset).report
        rows.append(
            {
                'use_bidir': use_bidir,
                'use_spectral': use_spectral,
                'use_superposition': use_superposition,
                **{key: value for key, value in report.to_dict().items() if key != 'threshold'},
            }
        )
    export_ablation_csv(rows, output_dir)
    export_ablation_summary(rows, output_dir)
    return {'runs': rows}


def describe_array(values: np.ndarray) -> Dict[str, Any]:
    values = np.asarray(values, dtype=np.float64)
    return {
        'shape': list(values.shape),
        'count': int(values.size),
        'min': float(values.min()),
        'max': float(values.max()),
        'mean': float(values.mean()),
        'std': float(values.std()),
    }


def summarize_tensor(path: Path) -> Dict[str, Any]:
    """Shape and summary statistics of a D2FT file."""
    return {'file': str(path), **describe_array(read_tensor(path))}


def evaluate_score_file(path: Path, threshold: float = DEFAULT_THRESHOLD) -> Dict[str, Any]:
    return evaluate_scores(read_scores(path), threshold).to_dict()
