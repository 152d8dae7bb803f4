"""Dual-domain fusion head: toy backbone, merged attention, superposition and classifier."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import ConfigurationError, DomainError, ShapeError
from .config import FusionConfig
from .spatial import BiDirParams, bidir_forward, init_bidir_params
from .spectral import SpectralParams, init_spectral_params, spectral_forward
from .superposition import WaveParams, init_wave_params, superposition_forward
from .tensor import (
    Parameter,
    Tensor,
    add,
    as_batch,
    conv1x1,
    einsum,
    fan_in_parameter,
    make_rng,
    mean,
    mul,
    relu,
    reshape,
    softplus,
    zeros_parameter,
)

POOL_FACTOR = 4
STEM_JITTER = 0.1


class ToyBackbone:
    """
    Fixed feature extractor standing in for a pretrained network.

    Images are average-pooled by 4 and passed through a 1x1 stem (3 -> C)
    and a ReLU. The stem is a bank of brightness thresholds: channel pairs
    share a threshold t_k, one responding above it and one below, so the
    features light up where pooled intensities leave the usual range.
    """

    def __init__(self, channels: int, seed: int = 0):
        if channels < 2 or channels % 2:
            raise DomainError(f'The toy backbone needs an even channel count, got {channels}')
        self.channels = channels
        rng = make_rng(seed)
        pairs = channels // 2
        slopes = np.where(np.arange(channels) % 2 == 0, 1.0, -1.0)
        thresholds = (np.arange(channels) // 2 + 0.5) / pairs
        jitter = 1.0 + rng.uniform(-STEM_JITTER, STEM_JITTER, size=(channels, 3))
        self.kernel = Tensor(slopes[:, None] / 3.0 * jitter)
        self.bias = Tensor(-slopes * thresholds)

    def __call__(self, images: np.ndarray) -> Tensor:
        """
        Parameters
        ----------
        images : np.ndarray
            H x W x 3 image or N x H x W x 3 batch, values in [0, 1]

        Returns
        -------
        Tensor
            C x H/4 x W/4 features (N x C x H/4 x W/4 for a batch)
        """
        pixels = np.asarray(images, dtype=np.float64)
        single = pixels.ndim == 3
        if single:
            pixels = pixels[None]
        if pixels.ndim != 4 or pixels.shape[-1] != 3:
            raise ShapeError(f'Expected H x W x 3 images, got {np.shape(images)}')
        n, height, width, _ = pixels.shape
        if height % POOL_FACTOR or width % POOL_FACTOR:
            raise ShapeError(f'Image extents {height}x{width} are not multiples of {POOL_FACTOR}')
        pooled = pixels.reshape(
            n, height // POOL_FACTOR, POOL_FACTOR, width // POOL_FACTOR, POOL_FACTOR, 3
        ).mean(axis=(2, 4))
        features = relu(conv1x1(Tensor(pooled.transpose(0, 3, 1, 2)), self.kernel, self.bias))
        return reshape(features, features.shape[1:]) if single else features


@dataclass
class FusionParams:
    bidir: BiDirParams
    spectral: SpectralParams
    wave: WaveParams
    classifier: Parameter
    bias: Parameter

    def all_parameters(self) -> List[Parameter]:
        return (
            self.bidir.parameters()
            + self.spectral.parameters()
            + self.wave.parameters()
            + [self.classifier, self.bias]
        )

    def groups(self) -> Dict[str, List[Parameter]]:
        return {
            'bidir': self.bidir.parameters(),
            'spectral': self.spectral.parameters(),
            'superposition': self.wave.parameters(),
            'classifier': [self.classifier, self.bias],
        }

    def by_name(self) -> Dict[str, Parameter]:
        return {p.name: p for p in self.all_parameters()}


def init_fusion_params(cfg: FusionConfig, seed: Optional[int] = None) -> FusionParams:
    """Seeded initial weights for every block; biases start at zero."""
    rng = make_rng(cfg.seed if seed is None else seed)
    return FusionParams(
        bidir=init_bidir_params(cfg.C, cfg.reduction, rng, gate=cfg.gate),
        spectral=init_spectral_params(
            cfg.C, cfg.H, cfg.W, rng, n=cfg.n, freqs=cfg.frequencies(), r_e=cfg.r_e, basis_variant=cfg.basis_variant
        ),
        wave=init_wave_params(cfg.C, cfg.m, rng),
        classifier=fan_in_parameter('head.classifier', (cfg.C,), rng),
        bias=zeros_parameter('head.bias', (1,)),
    )


def merge_branches(x, cfg: FusionConfig, params: FusionParams) -> Tensor:
    """X' = X_bi + X_sp over the enabled branches, or X itself when both are off."""
    branches = []
    if cfg.use_bidir:
        branches.append(bidir_forward(x, params.bidir)[0])
    if cfg.use_spectral:
        branches.append(spectral_forward(x, params.spectral))
    if not branches:
        return x
    merged = branches[0]
    for branch in branches[1:]:
        merged = add(merged, branch)
    return merged


def fusion_forward(x, cfg: FusionConfig, params: FusionParams) -> Tuple[Tensor, Tensor]:
    """
    Run the full head on a feature map.

    Parameters
    ----------
    x : Tensor
        C x H x W features, or a batch N x C x H x W
    cfg : FusionConfig
        Shapes and enabled components
    params : FusionParams
        Weights

    Returns
    -------
    Tuple[Tensor, Tensor]
        logit (scalar, or length N) and P (shape of x)
    """
    batch, squeeze = as_batch(x)
    if batch.shape[1:] != (cfg.C, cfg.H, cfg.W):
        raise ConfigurationError(f'Features of shape {batch.shape[1:]} do not match config {(cfg.C, cfg.H, cfg.W)}')
    merged = merge_branches(batch, cfg, params)
    p = superposition_forward(merged, params.wave) if cfg.use_superposition else merged
    pooled = mean(p, axis=(2, 3))
    logit = add(einsum('nc,c->n', pooled, params.classifier.value), params.bias.value)
    if squeeze:
        return reshape(logit, ()), reshape(p, p.shape[1:])
    return logit, p


def _label_signs(labels, shape: Tuple[int, ...]) -> Tensor:
    values = np.asarray(labels, dtype=np.float64)
    if not np.all((values == 0) | (values == 1)):
        raise DomainError(f'Labels must be 0 or 1, got {np.unique(values).tolist()}')
    if values.shape != shape:
        values = np.broadcast_to(values, shape)
    return Tensor(1.0 - 2.0 * values)


def bce_loss(logit, labels) -> Tensor:
    """
    Mean binary cross-entropy on sigmoid(logit).

    Written as softplus((1 - 2y) z), which equals -log sigmoid(z) for y = 1
    and -log(1 - sigmoid(z)) for y = 0 without overflow.
    """
    logit = logit if isinstance(logit, Tensor) else Tensor(logit)
    return mean(softplus(mul(logit, _label_signs(labels, logit.shape))))
