"""Fan-out of the swap augmentation over a list of image pairs."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from ..augment.dssim import SsimConstants
from ..augment.swap import augment_pair
from ..data.defaults import DEFAULT_FEATHER
from ..io.readers import read_image
from ..io.writers import write_image
from .optimization import get_optimal_worker_count, ordered_map

logger = logging.getLogger(__name__)


def pair_seed(seed: int, index: int) -> int:
    """Per-pair seed: the command seed XOR the pair index."""
    return seed ^ index


def augment_file_pair(
    fake: Path,
    source: Path,
    out: Path,
    seed: int,
    scale_ranges: Optional[Sequence[Sequence[int]]] = None,
    feather: float = DEFAULT_FEATHER,
    mode: str = 'standard',
    consts: SsimConstants = SsimConstants(),
) -> Dict[str, Any]:
    """
    Augment one pair of image files and write the result.

    Returns
    -------
    Dict[str, Any]
        Manifest record {fake, source, out, x_t, y_t, h, w, seed}
    """
    fake_pixels = read_image(fake)
    source_pixels = read_image(source)
    augmented, _, window = augment_pair(
        fake_pixels, source_pixels, consts, scale_ranges, feather=feather, seed=seed, mode=mode
    )
    write_image(out, augmented)
    logger.info(f'Augmented {fake} onto {source} at {window}')
    return {'fake': str(fake), 'source': str(source), 'out': str(out), 'seed': seed, **window.to_dict()}


def parallel_augment_pairs(
    pairs: List[Dict[str, str]],
    seed: int,
    scale_ranges: Optional[Sequence[Sequence[int]]] = None,
    feather: float = DEFAULT_FEATHER,
    mode: str = 'standard',
    max_workers: Optional[int] = None,
) -> List[Dict[str, Any]]:
    """
    Augment many pairs on the worker pool.

    Parameters
    ----------
    pairs : List[Dict[str, str]]
        Records with 'fake', 'source' and 'out' paths
    seed : int
        Command seed; pair i uses seed ^ i
    scale_ranges, feather, mode
        Passed to augment_pair
    max_workers : int, optional
        Worker cap, see get_optimal_worker_count

    Returns
    -------
    List[Dict[str, Any]]
        Manifest records in input order
    """
    max_workers = get_optimal_worker_count(max_workers)
    logger.info(f'Augmenting {len(pairs)} pairs using {max_workers} workers...')

    def process_pair(item):
        index, record = item
        return augment_file_pair(
            Path(record['fake']),
            Path(record['source']),
            Path(record['out']),
            pair_seed(seed, index),
            scale_ranges=scale_ranges,
            feather=feather,
            mode=mode,
        )

    return ordered_map(process_pair, list(enumerate(pairs)), max_workers)
