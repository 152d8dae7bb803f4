"""File readers: D2FT tensors, PPM/PNG images, score tables, configs and checkpoints."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
import pandas as pd
from PIL import Image, UnidentifiedImageError

from ..core.config import FusionConfig
from ..core.tensor import Tensor
from ..errors import (
    ConfigurationError,
    ImageFormatError,
    InvalidShapeError,
    ScoreFileError,
    TensorFormatError,
)
from ..postprocessing.metrics import ScoreSet

logger = logging.getLogger(__name__)

D2FT_MAGIC = b'D2FT'
D2FT_VERSION = 1
PNG_MAGIC = b'\x89PNG\r\n\x1a\n'
SUPPORTED_MODES = {'L': 1, 'RGB': 3}

PathLike = Union[str, Path]


def _read_bytes(filepath: PathLike) -> bytes:
    file_path = Path(filepath)
    if not file_path.is_file():
        raise FileNotFoundError(f'File does not exist: {file_path}')
    return file_path.read_bytes()


def decode_tensor(payload: bytes, source: str = '<bytes>') -> np.ndarray:
    """
    Decode a D2FT byte string.

    Layout: magic 'D2FT', then little-endian uint32 version (1), rank and
    rank extents, then row-major little-endian float32 values.

    Raises
    ------
    TensorFormatError
        Wrong magic or version, or a payload length that disagrees with the extents
    InvalidShapeError
        Rank 0 or a zero extent
    """
    if len(payload) < 12 or payload[:4] != D2FT_MAGIC:
        raise TensorFormatError(f'{source}: not a D2FT file (bad magic)')
    version, rank = np.frombuffer(payload, dtype='<u4', count=2, offset=4)
    if version != D2FT_VERSION:
        raise TensorFormatError(f'{source}: unsupported D2FT version {version}')
    header = 12 + 4 * int(rank)
    if len(payload) < header:
        raise TensorFormatError(f'{source}: truncated header for rank {rank}')
    extents = tuple(int(e) for e in np.frombuffer(payload, dtype='<u4', count=int(rank), offset=12))
    if rank == 0 or any(e == 0 for e in extents):
        raise InvalidShapeError(f'{source}: extents must be a non-empty list of positive integers, got {list(extents)}')
    count = int(np.prod(extents, dtype=np.int64))
    if len(payload) - header != 4 * count:
        raise TensorFormatError(
            f'{source}: payload holds {len(payload) - header} bytes, extents {list(extents)} need {4 * count}'
        )
    values = np.frombuffer(payload, dtype='<f4', offset=header).reshape(extents)
    if not np.all(np.isfinite(values)):
        raise TensorFormatError(f'{source}: payload contains non-finite values')
    return values.astype(np.float32)


def read_tensor(filepath: PathLike) -> np.ndarray:
    """Read a D2FT file into a float32 array."""
    return decode_tensor(_read_bytes(filepath), str(filepath))


def load_features(filepath: PathLike) -> Tensor:
    """Feature map from a D2FT file, as a Tensor."""
    return Tensor(read_tensor(filepath))


def _ppm_maxval(payload: bytes) -> int:
    """Maximum sample value declared in a P6 header, skipping comments."""
    tokens: List[bytes] = []
    for line in payload[2:].split(b'\n'):
        tokens.extend(line.split(b'#')[0].split())
        if len(tokens) >= 3:
            break
    try:
        return int(tokens[2])
    except (IndexError, ValueError):
        raise ImageFormatError('Malformed PPM header')


def read_image(filepath: PathLike) -> np.ndarray:
    """
    Load a binary PPM (P6) or an 8-bit gray/RGB PNG.

    Parameters
    ----------
    filepath : str or Path
        Image path

    Returns
    -------
    np.ndarray
        H x W x c float64 pixels in [0, 1], c = 1 or 3

    Raises
    ------
    ImageFormatError
        Unsupported format or mode, bit depth other than 8, truncated data
    """
    payload = _read_bytes(filepath)
    if payload[:2] == b'P6':
        expected = 'PPM'
        if _ppm_maxval(payload) != 255:
            raise ImageFormatError(f'{filepath}: only 8-bit PPM (maxval 255) is supported')
    elif payload[:8] == PNG_MAGIC:
        expected = 'PNG'
    else:
        raise ImageFormatError(f'{filepath}: only binary PPM (P6) and PNG are supported (magic {payload[:2]!r})')
    try:
        with Image.open(filepath) as img:
            if img.format != expected:
                raise ImageFormatError(f'{filepath}: decoded as {img.format}, expected {expected}')
            if img.mode not in SUPPORTED_MODES:
                raise ImageFormatError(f'{filepath}: mode {img.mode} is not 8-bit gray or RGB')
            img.load()
            pixels = np.asarray(img, dtype=np.uint8)
    except ImageFormatError:
        raise
    except (OSError, UnidentifiedImageError, SyntaxError, ValueError) as exc:
        raise ImageFormatError(f'{filepath}: cannot decode image: {exc}')
    if pixels.ndim == 2:
        pixels = pixels[:, :, None]
    return pixels.astype(np.float64) / 255.0


def read_scores(filepath: PathLike) -> ScoreSet:
    """Score table with header ``score,label``."""
    try:
        frame = pd.read_csv(filepath)
    except FileNotFoundError:
        raise
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ScoreFileError(f'{filepath}: cannot parse score table: {exc}')
    if list(frame.columns) != ['score', 'label']:
        raise ScoreFileError(f'{filepath}: expected header score,label, got {",".join(map(str, frame.columns))}')
    try:
        scores = frame['score'].to_numpy(dtype=np.float64)
        labels = frame['label'].to_numpy(dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ScoreFileError(f'{filepath}: non-numeric entries: {exc}')
    if len(labels) == 0 or np.any((labels != 0) & (labels != 1)):
        raise ScoreFileError(f'{filepath}: labels must be 0 or 1 and at least one row is required')
    return ScoreSet(scores, labels.astype(np.int64))


def read_json(filepath: PathLike) -> Any:
    try:
        return json.loads(Path(filepath).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f'{filepath}: invalid JSON: {exc}')


def load_config(filepath: PathLike) -> FusionConfig:
    """Validated FusionConfig from a JSON object file."""
    values = read_json(filepath)
    if not isinstance(values, dict):
        raise ConfigurationError(f'{filepath}: config must be a JSON object')
    return FusionConfig.from_dict(values)


def read_pairs(filepath: PathLike) -> List[Dict[str, str]]:
    """JSON-lines list of {fake, source, out} records."""
    records = []
    for number, line in enumerate(Path(filepath).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f'{filepath}:{number}: invalid JSON: {exc}')
        missing = {'fake', 'source', 'out'} - set(record)
        if missing:
            raise ConfigurationError(f'{filepath}:{number}: missing keys {sorted(missing)}')
        records.append(record)
    return records


def read_checkpoint(directory: PathLike) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """
    Load a checkpoint directory.

    Returns
    -------
    Tuple[Dict[str, np.ndarray], Dict[str, Any]]
        Parameter arrays by name, and the manifest
    """
    directory = Path(directory)
    manifest = read_json(directory / 'manifest.json')
    arrays = {}
    for entry in manifest.get('parameters', []):
        values = read_tensor(directory / entry['file'])
        if list(values.shape) != list(entry['shape']):
            raise TensorFormatError(
                f'{entry["file"]}: shape {list(values.shape)} disagrees with manifest {entry["shape"]}'
            )
        arrays[entry['name']] = values
    logger.info(f'Loaded {len(arrays)} parameters from {directory}')
    return arrays, manifest
