"""Bi-directional spatial attention from row and column pooled profiles."""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..errors import ConfigurationError, ShapeError
from .tensor import (
    Parameter,
    Tensor,
    as_batch,
    as_tensor,
    channel_fc,
    concat,
    einsum,
    fan_in_parameter,
    mean,
    narrow,
    relu,
    sigmoid,
    softmax,
    unbatch,
    zeros_parameter,
)

GATES = ('sigmoid', 'softmax')


@dataclass
class BiDirParams:
    """
    Squeeze kernel K1 ((C/r) x C) and the two directional kernels Kh, Kw (C x (C/r)).

    All three carry biases. ``gate`` selects how the directional logits become
    weights: 'sigmoid' per entry, or 'softmax' along the pooled axis.
    """

    reduction: int
    K1: Parameter
    b1: Parameter
    Kh: Parameter
    bh: Parameter
    Kw: Parameter
    bw: Parameter
    gate: str = 'sigmoid'

    @property
    def channels(self) -> int:
        return self.K1.shape[1]

    def parameters(self) -> List[Parameter]:
        return [self.K1, self.b1, self.Kh, self.bh, self.Kw, self.bw]


@dataclass
class DirectionalProfiles:
    """Intermediate maps of one forward pass (batched when the input was)."""

    Zh: Tensor
    Yw: Tensor
    q: Tensor
    f: Tensor
    fh: Tensor
    fw: Tensor
    g_h: Tensor
    g_w: Tensor


def init_bidir_params(
    channels: int, reduction: int, rng: np.random.Generator, gate: str = 'sigmoid', prefix: str = 'bidir'
) -> BiDirParams:
    """Fan-in uniform kernels, zero biases."""
    if reduction <= 0 or channels % reduction:
        raise ConfigurationError(f'Channel count {channels} is not divisible by reduction {reduction}')
    if gate not in GATES:
        raise ConfigurationError(f'Unknown gate {gate!r}; expected one of {GATES}')
    squeezed = channels // reduction
    return BiDirParams(
        reduction=reduction,
        K1=fan_in_parameter(f'{prefix}.K1', (squeezed, channels), rng),
        b1=zeros_parameter(f'{prefix}.b1', (squeezed,)),
        Kh=fan_in_parameter(f'{prefix}.Kh', (channels, squeezed), rng),
        bh=zeros_parameter(f'{prefix}.bh', (channels,)),
        Kw=fan_in_parameter(f'{prefix}.Kw', (channels, squeezed), rng),
        bw=zeros_parameter(f'{prefix}.bw', (channels,)),
        gate=gate,
    )


def pool_horizontal(x) -> Tensor:
    """Average over the width axis: C x H x W -> C x H."""
    x = as_tensor(x)
    if x.ndim < 3:
        raise ShapeError(f'Expected C x H x W, got {x.shape}')
    return mean(x, axis=-1)


def pool_vertical(x) -> Tensor:
    """Average over the height axis: C x H x W -> C x W."""
    x = as_tensor(x)
    if x.ndim < 3:
        raise ShapeError(f'Expected C x H x W, got {x.shape}')
    return mean(x, axis=-2)


def _gate(logits: Tensor, kind: str) -> Tensor:
    return sigmoid(logits) if kind == 'sigmoid' else softmax(logits, axis=-1)


def bidir_forward(x, params: BiDirParams) -> Tuple[Tensor, DirectionalProfiles]:
    """
    Reweight every position by a row gate and a column gate.

    Parameters
    ----------
    x : Tensor
        C x H x W feature map, or a batch N x C x H x W
    params : BiDirParams
        Kernels for a channel count equal to C

    Returns
    -------
    Tuple[Tensor, DirectionalProfiles]
        X_bi with the shape of x, and the intermediate profiles
    """
    batch, squeeze = as_batch(x)
    _, channels, height, width = batch.shape
    if channels != params.channels:
        raise ShapeError(f'Input has {channels} channels, kernels expect {params.channels}')
    if channels % params.reduction:
        raise ShapeError(f'Channel count {channels} is not divisible by reduction {params.reduction}')

    z_h = pool_horizontal(batch)
    y_w = pool_vertical(batch)
    q = concat([z_h, y_w], axis=-1)
    f = relu(channel_fc(q, params.K1.value, params.b1.value))
    f_h = narrow(f, -1, 0, height)
    f_w = narrow(f, -1, height, height + width)
    g_h = _gate(channel_fc(f_h, params.Kh.value, params.bh.value), params.gate)
    g_w = _gate(channel_fc(f_w, params.Kw.value, params.bw.value), params.gate)
    x_bi = einsum('nchw,nch,ncw->nchw', batch, g_h, g_w)

    profiles = DirectionalProfiles(Zh=z_h, Yw=y_w, q=q, f=f, fh=f_h, fw=f_w, g_h=g_h, g_w=g_w)
    return unbatch(x_bi, squeeze), profiles
