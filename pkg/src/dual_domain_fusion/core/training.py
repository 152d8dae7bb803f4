"""Toy training loop and held-out evaluation of the fusion head."""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..data.toy import ToyDataset
from ..errors import NonFiniteError, TrainingError
from ..postprocessing.metrics import MetricsReport, ScoreSet, evaluate_scores
from .config import FusionConfig
from .fusion import FusionParams, ToyBackbone, bce_loss, fusion_forward, init_fusion_params
from .tensor import Tensor, backward, make_rng, sgd_step, sigmoid

logger = logging.getLogger(__name__)

TRAIN_FRACTION = 0.8
FEATURE_CHUNK = 256


@dataclass
class TrainingHistory:
    step_losses: List[float] = field(default_factory=list)
    epoch_losses: List[float] = field(default_factory=list)
    learning_rates: List[float] = field(default_factory=list)


@dataclass
class TrainingResult:
    """Held-out metrics after and before training, trained weights and loss history."""

    report: MetricsReport
    initial_report: MetricsReport
    params: FusionParams
    history: TrainingHistory
    scores: ScoreSet


def split_indices(count: int) -> Tuple[np.ndarray, np.ndarray]:
    """First 80% of indices train, the rest are held out."""
    cut = int(count * TRAIN_FRACTION)
    indices = np.arange(count)
    return indices[:cut], indices[cut:]


def extract_features(images: np.ndarray, backbone: ToyBackbone) -> np.ndarray:
    """Backbone features for every image, computed in chunks."""
    chunks = [backbone(images[i:i + FEATURE_CHUNK]).numpy() for i in range(0, len(images), FEATURE_CHUNK)]
    return np.concatenate(chunks)


def predict(features: np.ndarray, cfg: FusionConfig, params: FusionParams) -> np.ndarray:
    """Sigmoid scores of a feature batch."""
    scores = []
    for i in range(0, len(features), FEATURE_CHUNK):
        logit, _ = fusion_forward(Tensor(features[i:i + FEATURE_CHUNK]), cfg, params)
        scores.append(sigmoid(logit).numpy())
    return np.concatenate(scores).astype(np.float64)


def evaluate(
    features: np.ndarray, labels: np.ndarray, cfg: FusionConfig, params: FusionParams
) -> Tuple[MetricsReport, ScoreSet]:
    score_set = ScoreSet(predict(features, cfg, params), labels)
    return evaluate_scores(score_set, cfg.threshold), score_set


def train_toy(
    cfg: FusionConfig,
    dataset: ToyDataset,
    epochs: Optional[int] = None,
    lr: Optional[float] = None,
    seed: Optional[int] = None,
) -> TrainingResult:
    """
    Minibatch gradient descent on the toy dataset.

    Parameters
    ----------
    cfg : FusionConfig
        Model shapes, batch size, threshold and optional lr schedule
    dataset : ToyDataset
        Images are split 80/20 by index into train and held-out parts
    epochs, lr, seed : optional
        Override the config values

    Returns
    -------
    TrainingResult
        Deterministic for identical arguments

    Raises
    ------
    TrainingError
        If the loss becomes non-finite; carries the step index
    """
    cfg = cfg.with_overrides(epochs=epochs, lr=lr, seed=seed)
    cfg.validate_toy()
    backbone = ToyBackbone(cfg.C, seed=cfg.seed)
    features = extract_features(dataset.images, backbone)
    train_idx, held_idx = split_indices(len(dataset))
    params = init_fusion_params(cfg)
    parameters = params.all_parameters()

    initial_report, _ = evaluate(features[held_idx], dataset.labels[held_idx], cfg, params)
    logger.info(f'Untrained held-out AUC: {initial_report.auc:.4f}')

    rng = make_rng(cfg.seed)
    history = TrainingHistory()
    step = 0
    for epoch in range(cfg.epochs):
        rate = cfg.learning_rate(epoch)
        order = train_idx[rng.permutation(len(train_idx))]
        epoch_losses = []
        for start in range(0, len(order), cfg.batch):
            batch = order[start:start + cfg.batch]
            try:
                logit, _ = fusion_forward(Tensor(features[batch]), cfg, params)
                loss = bce_loss(logit, dataset.labels[batch])
            except NonFiniteError as exc:
                raise TrainingError(f'Non-finite values at step {step}: {exc}', step=step)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingError(f'Loss diverged at step {step}', step=step)
            backward(loss, parameters)
            try:
                sgd_step(parameters, rate)
            except NonFiniteError as exc:
                raise TrainingError(f'Parameters diverged at step {step}: {exc}', step=step)
            history.step_losses.append(value)
            epoch_losses.append(value)
            step += 1
        history.epoch_losses.append(float(np.mean(epoch_losses)) if epoch_losses else float('nan'))
        history.learning_rates.append(rate)
        logger.info(f'Epoch {epoch + 1}/{cfg.epochs}: mean loss {history.epoch_losses[-1]:.4f} (lr {rate})')

    report, scores = evaluate(features[held_idx], dataset.labels[held_idx], cfg, params)
    logger.info(f'Held-out AUC after training: {report.auc:.4f}')
    return TrainingResult(
        report=report, initial_report=initial_report, params=params, history=history, scores=scores
    )
