"""Analysis of ablation runs and of what the superposition head does to features."""

from typing import Dict, List

import numpy as np
import pandas as pd

from ..core.config import FusionConfig
from ..core.fusion import FusionParams, merge_branches
from ..core.superposition import superposition_forward
from ..core.tensor import Tensor

ABLATION_FLAGS = ['use_bidir', 'use_spectral', 'use_superposition']
METRIC_COLUMNS = ['precision', 'recall', 'f1', 'acc', 'auc']


def rank_ablation_by_auc(rows: List[Dict]) -> pd.DataFrame:
    """
    Order ablation results by held-out AUC.

    Parameters
    ----------
    rows : List[Dict]
        One dict per run with the three component flags and the metric values

    Returns
    -------
    pd.DataFrame
        Columns flags + metrics, best AUC first; equal AUCs keep input order
    """
    frame = pd.DataFrame(rows, columns=ABLATION_FLAGS + METRIC_COLUMNS)
    return frame.sort_values('auc', ascending=False, kind='mergesort').reset_index(drop=True)


def component_contributions(ranked: pd.DataFrame) -> Dict[str, float]:
    """Mean AUC with a component enabled minus mean AUC with it disabled."""
    contributions = {}
    for flag in ABLATION_FLAGS:
        enabled = ranked.loc[ranked[flag].astype(bool), 'auc']
        disabled = ranked.loc[~ranked[flag].astype(bool), 'auc']
        if len(enabled) and len(disabled):
            contributions[flag] = float(enabled.mean() - disabled.mean())
    return contributions


def feature_separation(
    real_features: np.ndarray, fake_features: np.ndarray, cfg: FusionConfig, params: FusionParams
) -> Dict[str, float]:
    """
    Relative mean absolute real/fake gap of the merged feature X' and of the head output P.

    Parameters
    ----------
    real_features, fake_features : np.ndarray
        Paired N x C x H x W backbone features
    cfg : FusionConfig
        Enabled components
    params : FusionParams
        Weights

    Returns
    -------
    Dict[str, float]
        'merged_gap', 'superposed_gap' and their ratio 'amplification'
    """
    merged_real = merge_branches(Tensor(real_features), cfg, params)
    merged_fake = merge_branches(Tensor(fake_features), cfg, params)
    output_real = superposition_forward(merged_real, params.wave)
    output_fake = superposition_forward(merged_fake, params.wave)

    def gap(a: Tensor, b: Tensor) -> float:
        # relative to the mean magnitude of both maps
        scale = np.mean(np.abs(a.data)) + np.mean(np.abs(b.data))
        return float(np.mean(np.abs(a.data - b.data)) / scale) if scale else 0.0

    merged_gap = gap(merged_real, merged_fake)
    superposed_gap = gap(output_real, output_fake)
    return {
        'merged_gap': merged_gap,
        'superposed_gap': superposed_gap,
        'amplification': superposed_gap / merged_gap if merged_gap else 0.0,
    }
