"""Dual-domain attention fusion for face forgery detection."""

import sys

from . import augment
from . import core
from . import data
from . import io
from . import parallel
from . import postprocessing
from .cli import run

__version__ = '0.1.0'

__all__ = [
    'augment',
    'core',
    'data',
    'io',
    'parallel',
    'postprocessing',
    'run',
]


def main() -> None:
    sys.exit(run(sys.argv[1:]))
