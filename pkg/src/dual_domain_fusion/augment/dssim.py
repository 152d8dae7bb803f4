"""Local structural-similarity components and the dissimilarity map."""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from ..errors import ConfigurationError, DomainError, ShapeError

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
DSSIM_MODES = ('standard', 'paper-literal')
SINGULARITY_GUARD = 1e-6
# |1 - S| below this is rounding noise from the moment arithmetic
ROUNDING_FLOOR = 1e-12


@dataclass(frozen=True)
class SsimConstants:
    """
    Stabilizers, exponents and window of the SSIM comparison.

    Defaults follow the conventional choice for a dynamic range of 1:
    C1 = (0.01 L)^2, C2 = (0.03 L)^2, C3 = C2 / 2.
    """

    C1: float = 0.01**2
    C2: float = 0.03**2
    C3: float = 0.03**2 / 2
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    L: float = 1.0
    k: int = 7

    def __post_init__(self):
        if min(self.C1, self.C2, self.C3) <= 0:
            raise ConfigurationError(f'SSIM stabilizers must be positive, got {self.C1}, {self.C2}, {self.C3}')
        if self.k < 3 or self.k % 2 == 0:
            raise ConfigurationError(f'SSIM window size must be odd and >= 3, got {self.k}')
        if self.L <= 0:
            raise ConfigurationError(f'Dynamic range must be positive, got {self.L}')

    @classmethod
    def for_range(cls, L: float = 1.0, k: int = 7, alpha: float = 1.0, beta: float = 1.0, gamma: float = 1.0):
        c2 = (0.03 * L) ** 2
        return cls(C1=(0.01 * L) ** 2, C2=c2, C3=c2 / 2, alpha=alpha, beta=beta, gamma=gamma, L=L, k=k)


@dataclass(frozen=True)
class SsimMaps:
    """Per-pixel comparison maps and the local statistics they came from."""

    l: np.ndarray  # noqa: E741
    c: np.ndarray
    s: np.ndarray
    mu_f: np.ndarray
    mu_s: np.ndarray
    sd_f: np.ndarray
    sd_s: np.ndarray
    cov: np.ndarray


def to_luma(image: np.ndarray) -> np.ndarray:
    """Collapse an H x W x 3 image to H x W luma; single-channel images pass through."""
    pixels = np.asarray(image, dtype=np.float64)
    if pixels.ndim == 2:
        return pixels
    if pixels.ndim == 3 and pixels.shape[2] == 1:
        return pixels[:, :, 0]
    if pixels.ndim == 3 and pixels.shape[2] == 3:
        return pixels @ LUMA_WEIGHTS
    raise ShapeError(f'Expected an H x W x 1 or H x W x 3 image, got {pixels.shape}')


def _check_pair(fake: np.ndarray, source: np.ndarray) -> None:
    if np.shape(fake) != np.shape(source):
        raise ShapeError(f'Image extents differ: {np.shape(fake)} vs {np.shape(source)}')


def ssim_maps(fake: np.ndarray, source: np.ndarray, consts: SsimConstants = SsimConstants()) -> SsimMaps:
    """
    Compute luminance, contrast and structure comparison maps.

    Local means, deviations and covariance use a uniform k x k window centred
    on every pixel, with replicated borders. Variances are population variances.

    Parameters
    ----------
    fake : np.ndarray
        H x W or H x W x c image in [0, 1]
    source : np.ndarray
        Image with the same extents and channel count
    consts : SsimConstants
        Stabilizers and window size

    Returns
    -------
    SsimMaps
        Maps sharing the image extents
    """
    _check_pair(fake, source)
    f = to_luma(fake)
    s = to_luma(source)

    def local_mean(values):
        return uniform_filter(values, size=consts.k, mode='nearest')

    mu_f = local_mean(f)
    mu_s = local_mean(s)
    var_f = np.maximum(local_mean(f * f) - mu_f**2, 0.0)
    var_s = np.maximum(local_mean(s * s) - mu_s**2, 0.0)
    cov = local_mean(f * s) - mu_f * mu_s
    sd_f = np.sqrt(var_f)
    sd_s = np.sqrt(var_s)

    luminance = (2 * mu_f * mu_s + consts.C1) / (mu_f**2 + mu_s**2 + consts.C1)
    contrast = (2 * sd_f * sd_s + consts.C2) / (var_f + var_s + consts.C2)
    structure = (cov + consts.C3) / (sd_f * sd_s + consts.C3)
    return SsimMaps(
        l=luminance, c=contrast, s=structure, mu_f=mu_f, mu_s=mu_s, sd_f=sd_f, sd_s=sd_s, cov=cov
    )


def _signed_power(values: np.ndarray, exponent: float) -> np.ndarray:
    if exponent == 1.0:
        return values
    return np.sign(values) * np.abs(values) ** exponent


def similarity_index(maps: SsimMaps, consts: SsimConstants) -> np.ndarray:
    """S = l^alpha * c^beta * s^gamma per pixel."""
    return (
        _signed_power(maps.l, consts.alpha)
        * _signed_power(maps.c, consts.beta)
        * _signed_power(maps.s, consts.gamma)
    )


def dssim_map(
    fake: np.ndarray,
    source: np.ndarray,
    consts: SsimConstants = SsimConstants(),
    mode: str = 'standard',
) -> np.ndarray:
    """
    Per-pixel dissimilarity between two images.

    Parameters
    ----------
    fake, source : np.ndarray
        Images of equal extents
    consts : SsimConstants
        SSIM constants
    mode : str
        'standard' gives (1 - S) / 2, which grows where the images differ.
        'paper-literal' gives 1 / max(1 - S, 1e-6), which grows where they agree.

    Returns
    -------
    np.ndarray
        H x W float64 map
    """
    if mode not in DSSIM_MODES:
        raise DomainError(f'Unknown dssim mode {mode!r}; expected one of {DSSIM_MODES}')
    gap = 1.0 - similarity_index(ssim_maps(fake, source, consts), consts)
    gap = np.where(np.abs(gap) < ROUNDING_FLOOR, 0.0, gap)
    if mode == 'standard':
        return gap / 2.0
    return 1.0 / np.maximum(gap, SINGULARITY_GUARD)
