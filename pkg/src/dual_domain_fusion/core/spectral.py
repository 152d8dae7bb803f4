"""Multi-spectral channel attention: per-group DCT projections and excitation gates."""

import functools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError, DomainError, ShapeError
from .tensor import (
    Parameter,
    Tensor,
    as_batch,
    as_tensor,
    einsum,
    fan_in_parameter,
    linear,
    relu,
    sigmoid,
    unbatch,
    zeros_parameter,
)

BASIS_VARIANTS = ('paper-literal', 'dct2-standard')
FREQUENCY_GRID = 8


def dct_1d(length: int, k: int, variant: str = 'paper-literal') -> np.ndarray:
    """
    One cosine row of the given length.

    'paper-literal' shifts the frequency: cos(pi * h / L * (k + 1/2)).
    'dct2-standard' shifts the position: cos(pi * (h + 1/2) * k / L).
    """
    if variant not in BASIS_VARIANTS:
        raise DomainError(f'Unknown basis variant {variant!r}; expected one of {BASIS_VARIANTS}')
    if not 0 <= k < length:
        raise DomainError(f'Frequency index {k} out of range for length {length}')
    h = np.arange(length, dtype=np.float64)
    if variant == 'paper-literal':
        return np.cos(np.pi * h / length * (k + 0.5))
    return np.cos(np.pi * (h + 0.5) * k / length)


def dct_basis(height: int, width: int, u: int, v: int, variant: str = 'paper-literal') -> np.ndarray:
    """Separable H x W basis for frequency pair (u, v)."""
    return np.outer(dct_1d(height, u, variant), dct_1d(width, v, variant))


def zigzag_order(size: int = FREQUENCY_GRID) -> List[Tuple[int, int]]:
    """Frequency pairs of a size x size grid in JPEG zigzag order."""
    order = []
    for diagonal in range(2 * size - 1):
        cells = [(u, diagonal - u) for u in range(size) if 0 <= diagonal - u < size]
        order.extend(cells if diagonal % 2 else cells[::-1])
    return order


def default_frequencies(n: int, height: int, width: int) -> List[Tuple[int, int]]:
    """
    Frequency pair of every channel group when none are configured.

    The 8 x 8 zigzag order is rescaled to the H x W grid, dropping the repeats
    that rescaling produces on maps smaller than 8. The n pairs are then spaced
    evenly along what remains, from (0, 0) up to the highest band, so the groups
    span low through high frequencies rather than only the first n low ones.
    All returned pairs are distinct.

    Raises
    ------
    ConfigurationError
        If n is not positive or exceeds the distinct pairs of the grid
    """
    if n <= 0:
        raise ConfigurationError(f'Number of frequency groups must be positive, got {n}')
    scaled = list(
        dict.fromkeys((u * height // FREQUENCY_GRID, v * width // FREQUENCY_GRID) for u, v in zigzag_order())
    )
    if n > len(scaled):
        raise ConfigurationError(
            f'{n} frequency groups exceed the {len(scaled)} distinct default frequencies of a {height}x{width} map'
        )
    last = len(scaled) - 1
    picks = [0] if n == 1 else [round(i * last / (n - 1)) for i in range(n)]
    return [scaled[p] for p in picks]


@functools.lru_cache(maxsize=64)
def _channel_basis(
    channels: int, height: int, width: int, freqs: Tuple[Tuple[int, int], ...], variant: str
) -> np.ndarray:
    group = channels // len(freqs)
    basis = np.empty((channels, height, width))
    for i, (u, v) in enumerate(freqs):
        basis[i * group:(i + 1) * group] = dct_basis(height, width, u, v, variant)
    basis.flags.writeable = False
    return basis


def channel_basis(
    channels: int, height: int, width: int, freqs: Sequence[Sequence[int]], variant: str
) -> np.ndarray:
    """C x H x W stack where every channel of group i holds the basis of freqs[i]; cached, read-only."""
    if channels % len(freqs):
        raise ConfigurationError(f'Channel count {channels} is not divisible by {len(freqs)} frequency groups')
    key = tuple((int(u), int(v)) for u, v in freqs)
    return _channel_basis(channels, height, width, key, variant)


@dataclass
class SpectralParams:
    """Frequency assignment and the two-layer excitation of the spectral block."""

    n: int
    freqs: List[Tuple[int, int]]
    E1: Parameter
    b1: Parameter
    E2: Parameter
    b2: Parameter
    r_e: int = 4
    basis_variant: str = 'paper-literal'

    @property
    def channels(self) -> int:
        return self.E1.shape[1]

    def parameters(self) -> List[Parameter]:
        return [self.E1, self.b1, self.E2, self.b2]


@dataclass(frozen=True)
class SpectralBand:
    kappa: np.ndarray
    kappa_prime: np.ndarray


def init_spectral_params(
    channels: int,
    height: int,
    width: int,
    rng: np.random.Generator,
    n: int = 16,
    freqs: Optional[Sequence[Sequence[int]]] = None,
    r_e: int = 4,
    basis_variant: str = 'paper-literal',
    prefix: str = 'spectral',
) -> SpectralParams:
    if channels % n:
        raise ConfigurationError(f'Channel count {channels} is not divisible by n={n}')
    if r_e <= 0 or channels % r_e:
        raise ConfigurationError(f'Channel count {channels} is not divisible by r_e={r_e}')
    if basis_variant not in BASIS_VARIANTS:
        raise ConfigurationError(f'Unknown basis variant {basis_variant!r}')
    freqs = default_frequencies(n, height, width) if freqs is None else [tuple(f) for f in freqs]
    if len(freqs) != n:
        raise ConfigurationError(f'Expected {n} frequency pairs, got {len(freqs)}')
    hidden = channels // r_e
    return SpectralParams(
        n=n,
        freqs=freqs,
        E1=fan_in_parameter(f'{prefix}.E1', (hidden, channels), rng),
        b1=zeros_parameter(f'{prefix}.b1', (hidden,)),
        E2=fan_in_parameter(f'{prefix}.E2', (channels, hidden), rng),
        b2=zeros_parameter(f'{prefix}.b2', (channels,)),
        r_e=r_e,
        basis_variant=basis_variant,
    )


def spectral_squeeze(x, params: SpectralParams) -> Tensor:
    """
    Project each channel group onto its assigned DCT basis.

    Parameters
    ----------
    x : Tensor
        C x H x W or N x C x H x W
    params : SpectralParams
        Supplies n, freqs and the basis variant

    Returns
    -------
    Tensor
        kappa, length C (N x C for a batch), groups concatenated in order
    """
    batch, squeeze = as_batch(x)
    _, channels, height, width = batch.shape
    if channels % params.n:
        raise ConfigurationError(f'Channel count {channels} is not divisible by n={params.n}')
    if len(params.freqs) != params.n:
        raise ConfigurationError(f'Expected {params.n} frequency pairs, got {len(params.freqs)}')
    for u, v in params.freqs:
        if not (0 <= u < height and 0 <= v < width):
            raise DomainError(f'Frequency ({u}, {v}) out of range for a {height}x{width} map')
    basis = Tensor(channel_basis(channels, height, width, params.freqs, params.basis_variant))
    kappa = einsum('nchw,chw->nc', batch, basis)
    return unbatch(kappa, squeeze)


def excite(kappa, params: SpectralParams) -> Tensor:
    """kappa' = sigmoid(E2 relu(E1 kappa + b1) + b2), strictly inside (0, 1)."""
    kappa = as_tensor(kappa)
    if kappa.shape[-1] != params.channels:
        raise ShapeError(f'Expected {params.channels} responses, got shape {kappa.shape}')
    hidden = relu(linear(kappa, params.E1.value, params.b1.value))
    return sigmoid(linear(hidden, params.E2.value, params.b2.value))


def apply_channel_gate(x, gate) -> Tensor:
    """Scale every channel of x by its gate value."""
    batch, squeeze = as_batch(x)
    gate = as_tensor(gate)
    if gate.ndim == 1:
        gate = einsum('c,n->nc', gate, Tensor(np.ones(batch.shape[0])))
    if gate.shape != batch.shape[:2]:
        raise ShapeError(f'Gate of shape {gate.shape} does not match input {batch.shape}')
    return unbatch(einsum('nchw,nc->nchw', batch, gate), squeeze)


def spectral_forward(x, params: SpectralParams) -> Tensor:
    """X_sp = X reweighted per channel by the excitation of its spectral response."""
    return apply_channel_gate(x, excite(spectral_squeeze(x, params), params))


def spectral_band(x, params: SpectralParams) -> SpectralBand:
    kappa = spectral_squeeze(x, params)
    return SpectralBand(kappa=kappa.numpy(), kappa_prime=excite(kappa, params).numpy())
