"""Wave-token representation and phase-aware token fusion."""

from dataclasses import dataclass
from typing import List

import numpy as np

from ..errors import ConfigurationError, ShapeError
from .tensor import (
    Parameter,
    Tensor,
    absolute,
    add,
    as_batch,
    as_tensor,
    channel_fc,
    cos,
    einsum,
    fan_in_parameter,
    mul,
    reshape,
    sin,
    transpose,
    unbatch,
)


@dataclass
class WaveParams:
    """Token count and the five bias-free weight matrices of the superposition head."""

    m: int
    Wc: Parameter
    Wq: Parameter
    Wt: Parameter
    Wi: Parameter
    Wp: Parameter

    @property
    def channels(self) -> int:
        return self.Wc.shape[0]

    def parameters(self) -> List[Parameter]:
        return [self.Wc, self.Wq, self.Wt, self.Wi, self.Wp]


@dataclass
class WaveTokens:
    """Amplitude (>= 0) and phase of every token slot; shape m x C x s, optionally batched."""

    amplitude: Tensor
    phase: Tensor

    def __post_init__(self):
        if self.amplitude.shape != self.phase.shape:
            raise ShapeError(f'Amplitude {self.amplitude.shape} and phase {self.phase.shape} differ')


def init_wave_params(channels: int, m: int, rng: np.random.Generator, prefix: str = 'wave') -> WaveParams:
    return WaveParams(
        m=m,
        Wc=fan_in_parameter(f'{prefix}.Wc', (channels, channels), rng),
        Wq=fan_in_parameter(f'{prefix}.Wq', (channels, channels), rng),
        Wt=fan_in_parameter(f'{prefix}.Wt', (m, m), rng),
        Wi=fan_in_parameter(f'{prefix}.Wi', (m, m), rng),
        Wp=fan_in_parameter(f'{prefix}.Wp', (channels, channels), rng),
    )


def slots_per_token(height: int, width: int, m: int) -> int:
    if m <= 0 or (height * width) % m:
        raise ConfigurationError(f'H*W = {height * width} is not divisible by m={m}')
    return height * width // m


def split_tokens(x, m: int) -> Tensor:
    """
    Cut the row-major flattened spatial positions into m contiguous tokens.

    C x H x W becomes m x C x s with s = H*W/m; a leading batch axis is kept.
    """
    batch, squeeze = as_batch(x)
    n, channels, height, width = batch.shape
    s = slots_per_token(height, width, m)
    tokens = transpose(reshape(batch, (n, channels, m, s)), (0, 2, 1, 3))
    return unbatch(tokens, squeeze)


def merge_tokens(tokens, height: int, width: int) -> Tensor:
    """Inverse of split_tokens."""
    tokens = as_tensor(tokens)
    squeeze = tokens.ndim == 3
    if squeeze:
        tokens = reshape(tokens, (1,) + tokens.shape)
    n, m, channels, s = tokens.shape
    if m * s != height * width:
        raise ShapeError(f'{m} tokens of {s} slots cannot fill a {height}x{width} map')
    merged = reshape(transpose(tokens, (0, 2, 1, 3)), (n, channels, height, width))
    return unbatch(merged, squeeze)


def amplitude(tokens, Wc) -> Tensor:
    """|z| = |Wc . token|, the channel map applied at every slot."""
    return absolute(channel_fc(tokens, as_tensor(Wc)))


def phase(tokens, Wq) -> Tensor:
    """theta = Wq . token at every slot, without range reduction."""
    return channel_fc(tokens, as_tensor(Wq))


def superpose_pair(amp_k, theta_k, amp_j, theta_j) -> np.ndarray:
    """
    Amplitude of the sum of two waves.

    sqrt(a_k^2 + a_j^2 + 2 a_k a_j cos(theta_j - theta_k)); equal phases add the
    amplitudes, opposite phases subtract them.
    """
    amp_k = np.asarray(amp_k, dtype=np.float64)
    amp_j = np.asarray(amp_j, dtype=np.float64)
    radicand = amp_k**2 + amp_j**2 + 2.0 * amp_k * amp_j * np.cos(np.subtract(theta_j, theta_k))
    return np.sqrt(np.maximum(radicand, 0.0))


def token_fuse(waves: WaveTokens, Wt, Wi) -> Tensor:
    """
    Real readout of the token-mixed waves.

    o[j] = sum_r Wt[j, r] * |z_r| cos(theta_r) + Wi[j, r] * |z_r| sin(theta_r),
    with the per-(j, r) weights broadcast over channels and slots.
    """
    Wt, Wi = as_tensor(Wt), as_tensor(Wi)
    amp, theta = waves.amplitude, waves.phase
    squeeze = amp.ndim == 3
    if squeeze:
        amp = reshape(amp, (1,) + amp.shape)
        theta = reshape(theta, (1,) + theta.shape)
    m = amp.shape[1]
    if Wt.shape != (m, m) or Wi.shape != (m, m):
        raise ShapeError(f'Token weights {Wt.shape}, {Wi.shape} do not match {m} tokens')
    real = mul(amp, cos(theta))
    imaginary = mul(amp, sin(theta))
    fused = add(einsum('jr,nrcs->njcs', Wt, real), einsum('jr,nrcs->njcs', Wi, imaginary))
    return unbatch(fused, squeeze)


def wave_tokens(x, params: WaveParams) -> WaveTokens:
    tokens = split_tokens(x, params.m)
    return WaveTokens(amplitude=amplitude(tokens, params.Wc.value), phase=phase(tokens, params.Wq.value))


def superposition_forward(x, params: WaveParams) -> Tensor:
    """
    Split into tokens, estimate amplitude and phase, fuse across tokens,
    apply the output channel map and merge back.

    Parameters
    ----------
    x : Tensor
        Merged feature X', C x H x W or N x C x H x W
    params : WaveParams
        Weights for C channels and m tokens

    Returns
    -------
    Tensor
        P, same shape as x
    """
    x = as_tensor(x)
    if x.ndim not in (3, 4):
        raise ShapeError(f'Expected C x H x W or N x C x H x W, got {x.shape}')
    height, width = x.shape[-2:]
    if x.shape[-3] != params.channels:
        raise ShapeError(f'Input has {x.shape[-3]} channels, weights expect {params.channels}')
    fused = token_fuse(wave_tokens(x, params), params.Wt.value, params.Wi.value)
    return merge_tokens(channel_fc(fused, params.Wp.value), height, width)
