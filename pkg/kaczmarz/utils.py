"""Seeding, logging and small parsing helpers."""
import logging
import random as rn
import re

import numpy as np

from kaczmarz import config

_SHAPE = re.compile(r'^\s*(\d+)\s*[xX]\s*(\d+)\s*$')


def make_rng(seed=None):
    """Independent generator for one solve; same seed, same stream."""
    if seed is None:
        seed = config.SEED
    return np.random.default_rng(seed)


def set_random_seed(random_seed=config.SEED):
    """Seed the global generators used by the experiment scripts."""
    np.random.seed(random_seed)
    rn.seed(random_seed)


def configure_logging(verbosity=0):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def parse_shape(text):
    """Parse an ``MxN`` shape string into ``(m, n)``."""
    match = _SHAPE.match(text)
    if match is None:
        raise ValueError('expected a shape like 1000x200, got "{}"'.format(text))
    m, n = int(match.group(1)), int(match.group(2))
    if m < 1 or n < 1:
        raise ValueError('shape dimensions must be positive, got "{}"'.format(text))
    return m, n
