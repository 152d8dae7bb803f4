"""Synthetic real/fake face stand-ins for desk-scale training."""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.ndimage import zoom

from ..augment.swap import WindowSpec, blend, make_mask
from ..core.tensor import make_rng
from ..errors import ConfigurationError
from .defaults import TOY_FEATHER

logger = logging.getLogger(__name__)

NOISE_GRID = 8
BASE_RANGE = (0.35, 0.65)
NOISE_AMPLITUDE = 0.1
CHECKER_AMPLITUDE = 0.45
CHECKER_CELL = 4


@dataclass
class ToyDataset:
    """
    Interleaved pairs: even indices are real images, odd indices the fake
    made from the real image just before it.
    """

    images: np.ndarray
    labels: np.ndarray
    bases: np.ndarray
    windows: List[Optional[WindowSpec]]

    def __len__(self) -> int:
        return len(self.labels)


def smooth_image(rng: np.random.Generator, size: int) -> np.ndarray:
    """Seeded low-frequency image: a uniform level plus bilinear-upsampled 8 x 8 noise."""
    level = rng.uniform(*BASE_RANGE)
    noise = rng.uniform(-1.0, 1.0, size=(NOISE_GRID, NOISE_GRID, 3))
    upsampled = zoom(noise, (size / NOISE_GRID, size / NOISE_GRID, 1), order=1)
    return np.clip(level + NOISE_AMPLITUDE * upsampled, 0.0, 1.0)


def checkerboard(size: int, cell: int = CHECKER_CELL) -> np.ndarray:
    """+1/-1 cells of ``cell`` pixels anchored at the image origin, H x W x 1."""
    index = np.arange(size) // cell
    board = np.where((index[:, None] + index[None, :]) % 2 == 0, 1.0, -1.0)
    return board[:, :, None]


def make_toy_dataset(count: int, image_size: int = 32, seed: int = 0) -> ToyDataset:
    """
    Build a balanced labeled set of 3-channel images.

    Parameters
    ----------
    count : int
        Number of images, must be even
    image_size : int
        Side length, a multiple of 4 and at least 8
    seed : int
        Seed of every random draw

    Returns
    -------
    ToyDataset
        Identical for identical arguments
    """
    if count <= 0 or count % 2:
        raise ConfigurationError(f'Toy dataset size must be a positive even number, got {count}')
    if image_size < 8 or image_size % CHECKER_CELL:
        raise ConfigurationError(f'Toy image size must be a multiple of {CHECKER_CELL} and >= 8, got {image_size}')
    rng = make_rng(seed)
    side = image_size // 4
    board = checkerboard(image_size)

    images, labels, bases, windows = [], [], [], []
    for _ in range(count // 2):
        real = smooth_image(rng, image_size)
        y_t, x_t = (int(v) for v in rng.integers(0, image_size - side + 1, size=2))
        window = WindowSpec(x_t=x_t, y_t=y_t, h=side, w=side)
        perturbed = np.clip(real + CHECKER_AMPLITUDE * board, 0.0, 1.0)
        fake = blend(perturbed, real, make_mask(window, image_size, image_size, TOY_FEATHER))

        images.extend([real, fake])
        labels.extend([0, 1])
        bases.extend([real, real])
        windows.extend([None, window])

    logger.info(f'Built toy dataset: {count} images of {image_size}x{image_size}')
    return ToyDataset(
        images=np.stack(images),
        labels=np.array(labels, dtype=np.int64),
        bases=np.stack(bases),
        windows=windows,
    )
