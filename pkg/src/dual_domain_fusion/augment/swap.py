"""Artifact-window localization, blending masks and the swap augmentation."""

import logging
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.tensor import make_rng
from ..data.defaults import DEFAULT_FEATHER, DEFAULT_SCALE_RANGES
from ..errors import ConfigurationError, DomainError, ShapeError
from .dssim import SsimConstants, dssim_map

logger = logging.getLogger(__name__)

TIE_ULPS = 4


@dataclass(frozen=True)
class WindowSpec:
    """Top-left column/row and extents of a rectangular window."""

    x_t: int
    y_t: int
    h: int
    w: int

    def fits(self, height: int, width: int) -> bool:
        return (
            self.h > 0
            and self.w > 0
            and 0 <= self.y_t
            and self.y_t + self.h <= height
            and 0 <= self.x_t
            and self.x_t + self.w <= width
        )

    def to_dict(self) -> dict:
        return asdict(self)


def summed_area_table(values: np.ndarray) -> np.ndarray:
    """
    Integral image with a leading row and column of zeros.

    ``sat[y, x]`` is the sum of ``values[:y, :x]``, so any rectangle sum needs
    four lookups.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ShapeError(f'Expected a 2-D map, got {values.shape}')
    sat = np.zeros((values.shape[0] + 1, values.shape[1] + 1))
    sat[1:, 1:] = values.cumsum(axis=0).cumsum(axis=1)
    return sat


def window_sums(values: np.ndarray, h: int, w: int) -> np.ndarray:
    """Sum of every h x w window; entry [y, x] belongs to the window with top-left (y, x)."""
    height, width = np.shape(values)
    if not (0 < h <= height and 0 < w <= width):
        raise ShapeError(f'Window {h}x{w} does not fit a {height}x{width} map')
    sat = summed_area_table(values)
    return sat[h:, w:] - sat[:-h, w:] - sat[h:, :-w] + sat[:-h, :-w]


def locate_window(values: np.ndarray, h: int, w: int) -> WindowSpec:
    """
    Find the h x w window with the largest sum.

    Parameters
    ----------
    values : np.ndarray
        Per-pixel map, H x W
    h, w : int
        Window extents

    Returns
    -------
    WindowSpec
        Ties go to the smallest (y_t, x_t) in lexicographic order; sums within
        the summed-area rounding error of the maximum count as ties
    """
    sums = window_sums(values, h, w)
    height, width = np.shape(values)
    tolerance = TIE_ULPS * (height + width) * np.finfo(np.float64).eps * float(np.abs(values).sum())
    # flatnonzero is row-major, so the first hit has the smallest (y_t, x_t)
    first = int(np.flatnonzero(sums >= sums.max() - tolerance)[0])
    y_t, x_t = np.unravel_index(first, sums.shape)
    return WindowSpec(x_t=int(x_t), y_t=int(y_t), h=int(h), w=int(w))


def make_mask(win: WindowSpec, height: int, width: int, feather: float = 0) -> np.ndarray:
    """
    Blending mask: 1 inside the window, 0 outside.

    With ``feather > 0`` the mask falls linearly from 1 to 0 over ``feather``
    pixels outward from the window border, by Chebyshev distance.
    """
    if feather < 0:
        raise DomainError(f'Feather radius must be non-negative, got {feather}')
    if not win.fits(height, width):
        raise ShapeError(f'Window {win} lies outside a {height}x{width} image')
    rows = np.arange(height)
    cols = np.arange(width)
    dy = np.maximum(np.maximum(win.y_t - rows, rows - (win.y_t + win.h - 1)), 0)
    dx = np.maximum(np.maximum(win.x_t - cols, cols - (win.x_t + win.w - 1)), 0)
    distance = np.maximum(dy[:, None], dx[None, :]).astype(np.float64)
    if feather == 0:
        return (distance == 0).astype(np.float64)
    return np.clip(1.0 - distance / feather, 0.0, 1.0)


def blend(fake: np.ndarray, source: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """
    Convex combination ``M * fake + (1 - M) * source`` per channel, clamped to [0, 1].
    """
    fake = np.asarray(fake, dtype=np.float64)
    source = np.asarray(source, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if fake.shape != source.shape or fake.shape[:2] != mask.shape:
        raise ShapeError(f'Extents differ: fake {fake.shape}, source {source.shape}, mask {mask.shape}')
    weights = mask[:, :, None] if fake.ndim == 3 else mask
    return np.clip(weights * fake + (1.0 - weights) * source, 0.0, 1.0)


def sample_window_size(
    rng: np.random.Generator, scale_ranges: Sequence[Sequence[int]], height: int, width: int
) -> Tuple[int, int]:
    """Pick a range uniformly, then h and w uniformly within it, clamped to the image."""
    lo, hi = scale_ranges[int(rng.integers(len(scale_ranges)))]
    h = int(rng.integers(lo, hi + 1))
    w = int(rng.integers(lo, hi + 1))
    return min(h, height), min(w, width)


def _validate_scale_ranges(scale_ranges: Sequence[Sequence[int]]) -> None:
    if not scale_ranges:
        raise ConfigurationError('At least one window scale range is required')
    for bounds in scale_ranges:
        if len(bounds) != 2 or not 0 < bounds[0] <= bounds[1]:
            raise ConfigurationError(f'Scale range must be [lo, hi] with 0 < lo <= hi, got {bounds}')


def augment_pair(
    fake: np.ndarray,
    source: np.ndarray,
    consts: SsimConstants = SsimConstants(),
    scale_ranges: Optional[Sequence[Sequence[int]]] = None,
    feather: float = DEFAULT_FEATHER,
    seed: int = 0,
    mode: str = 'standard',
) -> Tuple[np.ndarray, np.ndarray, WindowSpec]:
    """
    Paste the most dissimilar window of a fake image onto its source.

    Parameters
    ----------
    fake, source : np.ndarray
        Images of equal extents in [0, 1]
    consts : SsimConstants
        SSIM constants for the dissimilarity map
    scale_ranges : Sequence[Sequence[int]], optional
        Inclusive [lo, hi] window-side ranges; defaults to DEFAULT_SCALE_RANGES
    feather : float
        Mask feather radius in pixels
    seed : int
        Seed of the window-size draw
    mode : str
        Dissimilarity mode, 'standard' unless overridden

    Returns
    -------
    Tuple[np.ndarray, np.ndarray, WindowSpec]
        Augmented image, mask and the chosen window
    """
    scale_ranges = DEFAULT_SCALE_RANGES if scale_ranges is None else scale_ranges
    _validate_scale_ranges(scale_ranges)
    if np.shape(fake) != np.shape(source):
        raise ShapeError(f'Image extents differ: {np.shape(fake)} vs {np.shape(source)}')
    height, width = np.shape(fake)[:2]
    smallest = min(bounds[0] for bounds in scale_ranges)
    if min(height, width) < smallest:
        raise ConfigurationError(
            f'Images of {height}x{width} are smaller than the smallest window scale {smallest}'
        )

    rng = make_rng(seed)
    h, w = sample_window_size(rng, scale_ranges, height, width)
    dissimilarity = dssim_map(fake, source, consts, mode=mode)
    window = locate_window(dissimilarity, h, w)
    mask = make_mask(window, height, width, feather)
    logger.debug(f'Window {window} selected for seed {seed}')
    return blend(fake, source, mask), mask, window
