#!/usr/bin/env python3
"""
Dual-Domain Fusion Runner

Runs one capability of the dual_domain_fusion package per invocation:
1. augment / dssim: DSSIM-guided swap augmentation of fake/source image pairs
2. attend: bi-directional and spectral attention plus wave-token superposition on stored features
3. gradcheck: finite-difference verification of every block
4. train-toy / ablate: desk-scale training on synthetic real/fake images
5. metrics / inspect: score-table metrics and tensor-file summaries

JSON results go to stdout, logs to stderr (and run.log for training runs).
"""

import sys
from pathlib import Path

try:
    from dual_domain_fusion.cli import get_parser, run
except ImportError:
    sys.path.insert(0, str(Path(__file__).resolve().parents[1] / 'src'))
    from dual_domain_fusion.cli import get_parser, run

__all__ = ['get_parser', 'main']


def main():
    """Run the requested subcommand and exit with its status code."""
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()
