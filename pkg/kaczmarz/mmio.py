"""Matrix Market reading and writing on top of `scipy.io`."""
import logging
import re

import numpy as np
import scipy.io
import scipy.sparse as sp

from kaczmarz.errors import ParseError, UnsupportedField
from kaczmarz.matrix import Matrix

logger = logging.getLogger(__name__)

_BANNER = '%%MatrixMarket'
# 17 significant digits reproduce every float64 exactly
_PRECISION = 17
# scipy reports body errors as "Line 3: ..."
_LINE = re.compile(r'^\s*line (\d+):?\s*', re.IGNORECASE)


def _check_banner(path):
    with open(path, 'r', encoding='utf-8', errors='replace') as f:
        first = f.readline()
    if not first.startswith(_BANNER):
        raise ParseError(1, 'missing "{}" banner'.format(_BANNER))
    tokens = first.split()
    if len(tokens) != 5:
        raise ParseError(1, 'banner must read "{} matrix <format> <field> <symmetry>"'
                         .format(_BANNER))
    return tokens


def _parse_error(e):
    message = str(e)
    match = _LINE.match(message)
    if match is None:
        return ParseError(None, message)
    return ParseError(int(match.group(1)), message[match.end():])


def read_matrix_market(path, transpose=False):
    """Load a real Matrix Market file as a `Matrix`.

    Coordinate files come back as CSR, array files as dense storage. Pattern
    entries read as 1.0, symmetric files are expanded to full storage and
    duplicate coordinates are summed.

    Arguments:
    path: file path.
    transpose: return A^T instead of A.
    """
    tokens = _check_banner(path)
    if tokens[3].lower() == 'complex':
        raise UnsupportedField('complex')
    try:
        rows, cols, entries, fmt, field, symmetry = scipy.io.mminfo(path)
    except (ValueError, IndexError) as e:
        raise _parse_error(e)
    if field == 'complex':
        raise UnsupportedField(field)

    try:
        data = scipy.io.mmread(path)
    except (ValueError, IndexError, OverflowError) as e:
        raise _parse_error(e)
    logger.info('read %s: %dx%d %s %s %s (%d entries)',
                path, rows, cols, fmt, field, symmetry, entries)

    if sp.issparse(data):
        matrix = Matrix.from_sparse(data)
    else:
        matrix = Matrix.from_dense(np.asarray(data, dtype=np.float64))
    return matrix.transpose() if transpose else matrix


def write_matrix_market(matrix, path):
    """Write `matrix` in coordinate (CSR storage) or array (dense storage) format."""
    data = matrix.storage if matrix.is_sparse else matrix.toarray()
    scipy.io.mmwrite(path, data, precision=_PRECISION, symmetry='general')
    logger.info('wrote %s: %dx%d (%d stored entries)', path, matrix.m, matrix.n, matrix.nnz)
