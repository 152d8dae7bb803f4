"""Atomic file writers for tensors, images, score tables, JSON and checkpoints."""

import contextlib
import io
import json
import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, Optional, Union

import numpy as np
import pandas as pd
from PIL import Image

from ..core.tensor import Parameter, Tensor
from ..errors import ImageFormatError, InvalidShapeError, TensorFormatError
from ..postprocessing.metrics import ScoreSet
from .readers import D2FT_MAGIC, D2FT_VERSION

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
IMAGE_FORMATS = {'.png': 'PNG', '.ppm': 'PPM'}


def atomic_write_bytes(filepath: PathLike, payload: bytes) -> Path:
    """
    Write bytes through a temporary file in the target directory, then rename.

    Readers never observe a partially written file.
    """
    file_path = Path(filepath)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(dir=file_path.parent, prefix=f'.{file_path.name}.', suffix='.tmp')
    try:
        with os.fdopen(handle, 'wb') as f:
            f.write(payload)
        os.replace(temp_name, file_path)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise
    return file_path


def atomic_write_text(filepath: PathLike, text: str) -> Path:
    return atomic_write_bytes(filepath, text.encode('utf-8'))


def encode_tensor(values) -> bytes:
    """D2FT bytes for a tensor or array."""
    array = values.data if isinstance(values, Tensor) else np.asarray(values)
    if array.ndim == 0 or array.size == 0:
        raise InvalidShapeError(f'D2FT needs rank >= 1 and positive extents, got shape {array.shape}')
    if not np.all(np.isfinite(array)):
        raise TensorFormatError('Refusing to write non-finite values')
    header = np.array([D2FT_VERSION, array.ndim, *array.shape], dtype='<u4').tobytes()
    return D2FT_MAGIC + header + np.ascontiguousarray(array, dtype='<f4').tobytes()


def write_tensor(filepath: PathLike, values) -> Path:
    return atomic_write_bytes(filepath, encode_tensor(values))


def save_features(filepath: PathLike, features) -> Path:
    """Feature map to a D2FT file; bit-exact for 32-bit tensors."""
    return write_tensor(filepath, features)


def encode_image(pixels: np.ndarray, image_format: str) -> bytes:
    values = np.asarray(pixels, dtype=np.float64)
    if values.ndim == 3 and values.shape[2] == 1:
        values = values[:, :, 0]
    if values.ndim not in (2, 3) or (values.ndim == 3 and values.shape[2] != 3):
        raise ImageFormatError(f'Cannot encode image of shape {np.shape(pixels)}')
    if values.ndim == 2 and image_format == 'PPM':
        # P6 holds RGB only
        values = np.repeat(values[:, :, None], 3, axis=2)
    quantized = np.round(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)
    buffer = io.BytesIO()
    Image.fromarray(quantized).save(buffer, format=image_format)
    return buffer.getvalue()


def write_image(filepath: PathLike, pixels: np.ndarray) -> Path:
    """
    Save an H x W x c image in [0, 1] as PNG or binary PPM, chosen by suffix.

    Values are stored as round(v * 255).
    """
    suffix = Path(filepath).suffix.lower()
    if suffix not in IMAGE_FORMATS:
        raise ImageFormatError(f'Unsupported image suffix {suffix!r}; use .png or .ppm')
    return atomic_write_bytes(filepath, encode_image(pixels, IMAGE_FORMATS[suffix]))


def dump_json(payload: Any) -> str:
    """Stable-key-ordered JSON text."""
    return json.dumps(payload, sort_keys=True, indent=2) + '\n'


def write_json(filepath: PathLike, payload: Any) -> Path:
    return atomic_write_text(filepath, dump_json(payload))


def write_jsonl(filepath: PathLike, records: Iterable[Dict[str, Any]], append: bool = False) -> Path:
    """JSON-lines records; with ``append`` the existing lines are kept."""
    file_path = Path(filepath)
    existing = file_path.read_text() if append and file_path.exists() else ''
    lines = ''.join(json.dumps(record, sort_keys=True) + '\n' for record in records)
    return atomic_write_text(file_path, existing + lines)


def write_scores(filepath: PathLike, score_set: ScoreSet) -> Path:
    """Score table with header ``score,label``."""
    frame = pd.DataFrame({'score': score_set.scores, 'label': score_set.labels})
    return atomic_write_text(filepath, frame.to_csv(index=False, float_format='%.9g'))


@contextlib.contextmanager
def staged_directory(directory: PathLike) -> Iterator[Path]:
    """
    Collect a run's outputs in a hidden sibling directory, then move them into place.

    If the block raises, the staging directory is removed and ``directory`` is
    left as it was. On success a missing ``directory`` is created by one rename;
    an existing one keeps its other files and has same-named entries replaced.

    Yields
    ------
    Path
        Staging directory to write into
    """
    target = Path(directory).resolve()
    target.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(dir=target.parent, prefix=f'.{target.name}.', suffix='.tmp'))
    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise

    if not target.exists():
        os.replace(staging, target)
        return
    for entry in sorted(staging.iterdir()):
        destination = target / entry.name
        if destination.is_dir() and not destination.is_symlink():
            shutil.rmtree(destination)
        os.replace(entry, destination)
    staging.rmdir()
    logger.debug(f'Moved staged outputs into {target}')


def write_checkpoint(
    directory: PathLike, parameters: Iterable[Parameter], config: Optional[Dict[str, Any]] = None
) -> Path:
    """
    One D2FT file per parameter plus ``manifest.json`` with names and shapes.

    The manifest is written last.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for parameter in parameters:
        filename = f'{parameter.name}.d2ft'
        write_tensor(directory / filename, parameter.value)
        entries.append({'name': parameter.name, 'file': filename, 'shape': list(parameter.shape)})
    manifest = {'format': 'd2ft-checkpoint', 'version': D2FT_VERSION, 'parameters': entries}
    if config is not None:
        manifest['config'] = config
    write_json(directory / 'manifest.json', manifest)
    logger.info(f'Wrote checkpoint with {len(entries)} parameters to {directory}')
    return directory
