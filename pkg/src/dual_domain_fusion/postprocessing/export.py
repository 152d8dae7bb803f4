"""Export of run results to JSON, CSV and HDF5."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List

import h5py
import numpy as np

from ..io.writers import atomic_write_bytes, atomic_write_text, write_json
from .analysis import component_contributions, rank_ablation_by_auc

logger = logging.getLogger(__name__)


def export_metrics_json(payload: Dict[str, Any], output_dir: Path, filename: str = 'metrics.json') -> Path:
    """
    Write a metrics payload with sorted keys.

    Parameters
    ----------
    payload : Dict[str, Any]
        JSON-serializable result
    output_dir : Path
        Output directory
    filename : str
        Output filename (default: "metrics.json")

    Returns
    -------
    Path
        Path to created file
    """
    output_path = Path(output_dir) / filename
    write_json(output_path, payload)
    logger.info(f'Exported metrics to: {output_path}')
    return output_path


def export_ablation_csv(rows: List[Dict], output_dir: Path, filename: str = 'ablation.csv') -> Path:
    """
    Ablation table ranked by AUC.

    Returns
    -------
    Path
        Path to created CSV file
    """
    output_path = Path(output_dir) / filename
    ranked = rank_ablation_by_auc(rows)
    for flag in ('use_bidir', 'use_spectral', 'use_superposition'):
        ranked[flag] = ranked[flag].astype(int)
    atomic_write_text(output_path, ranked.to_csv(index=False, float_format='%.6f'))
    logger.info(f'Exported ablation table to: {output_path}')
    return output_path


def export_ablation_summary(rows: List[Dict], output_dir: Path, filename: str = 'ablation.json') -> Path:
    """Per-component AUC contributions alongside the best configuration."""
    ranked = rank_ablation_by_auc(rows)
    summary = {
        'best': {key: (bool(v) if key.startswith('use_') else float(v)) for key, v in ranked.iloc[0].items()},
        'contributions': component_contributions(ranked),
    }
    return export_metrics_json(summary, output_dir, filename)


def export_training_history(
    history,
    scores,
    config: Dict[str, Any],
    output_dir: Path,
    filename: str = 'history.h5',
) -> Path:
    """
    Archive losses and held-out scores in HDF5.

    Datasets: ``step_loss``, ``epoch_loss``, ``learning_rate``,
    ``heldout/score``, ``heldout/label``; the config is stored as a JSON
    attribute. Timestamps are not recorded.
    """
    output_path = Path(output_dir) / filename
    temp_path = output_path.with_name(f'.{filename}.tmp')
    output_path.parent.mkdir(parents=True, exist_ok=True)

    with h5py.File(temp_path, 'w', track_order=True) as f:
        f.attrs['config'] = json.dumps(config, sort_keys=True)
        f.attrs['n_steps'] = len(history.step_losses)
        f.attrs['n_epochs'] = len(history.epoch_losses)
        f.create_dataset('step_loss', data=np.asarray(history.step_losses, dtype=np.float64), track_times=False)
        f.create_dataset('epoch_loss', data=np.asarray(history.epoch_losses, dtype=np.float64), track_times=False)
        f.create_dataset(
            'learning_rate', data=np.asarray(history.learning_rates, dtype=np.float64), track_times=False
        )
        heldout = f.create_group('heldout')
        heldout.create_dataset('score', data=scores.scores, track_times=False)
        heldout.create_dataset('label', data=scores.labels, track_times=False)

    atomic_write_bytes(output_path, temp_path.read_bytes())
    temp_path.unlink()
    logger.info(f'Exported training history to: {output_path}')
    return output_path
