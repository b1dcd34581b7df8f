"""Storage-agnostic matrix with the row primitives a Kaczmarz step needs."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from kaczmarz.errors import DimensionMismatch, ZeroNormRow


def _freeze(array):
    array.setflags(write=False)
    return array


class Matrix:
    """Real 64-bit matrix stored densely (row-major) or as CSR.

    Both storages expose the same row-level interface, so selection rules and
    the iteration engine never branch on the layout. Instances are immutable
    once built.

    Build with `Matrix.from_dense`, `Matrix.from_sparse` or `Matrix.from_csr`
    rather than calling the constructor directly.

    Arguments:
    dense: C-contiguous float64 array of shape (m, n), or None.
    csr: canonical `scipy.sparse.csr_array` (sorted indices, no duplicates,
        no explicit zeros), or None.
    """

    def __init__(self, dense=None, csr=None):
        assert (dense is None) != (csr is None)
        self._dense = dense
        self._csr = csr
        data = dense if dense is not None else csr
        self.m, self.n = data.shape
        if self.m < 1 or self.n < 1:
            raise ValueError('matrix must have at least one row and one column, '
                             'got shape {}'.format(data.shape))

    # ------------------------------------------------------------------------------------
    # Construction
    @classmethod
    def from_dense(cls, array):
        array = np.array(array, dtype=np.float64, order='C', copy=True)
        if array.ndim != 2:
            raise ValueError('dense matrix must be 2-D, got {} dimensions'.format(array.ndim))
        if not np.all(np.isfinite(array)):
            raise ValueError('matrix entries must be finite')
        return cls(dense=_freeze(array))

    @classmethod
    def from_sparse(cls, matrix):
        """Canonicalise any scipy sparse matrix: duplicates summed, zeros dropped."""
        csr = sp.csr_array(matrix, dtype=np.float64, copy=True)
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        if not np.all(np.isfinite(csr.data)):
            raise ValueError('matrix entries must be finite')
        for part in (csr.data, csr.indices, csr.indptr):
            _freeze(part)
        return cls(csr=csr)

    @classmethod
    def from_csr(cls, indptr, indices, values, shape):
        """Build from a raw CSR triplet after checking its structure."""
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        m, n = shape
        if indptr.shape != (m + 1,):
            raise ValueError('row offsets must have length m + 1 = {}'.format(m + 1))
        if indptr[0] != 0 or np.any(np.diff(indptr) < 0):
            raise ValueError('row offsets must start at 0 and be nondecreasing')
        if indptr[-1] != len(values) or len(indices) != len(values):
            raise ValueError('final row offset must equal the number of stored values')
        if len(indices) and (indices.min() < 0 or indices.max() >= n):
            raise ValueError('column indices must lie in [0, {})'.format(n))
        return cls.from_sparse(sp.csr_array((values, indices, indptr), shape=(m, n)))

    # ------------------------------------------------------------------------------------
    @property
    def shape(self):
        return self.m, self.n

    @property
    def is_sparse(self):
        return self._csr is not None

    @property
    def nnz(self):
        if self.is_sparse:
            return int(self._csr.nnz)
        return int(np.count_nonzero(self._dense))

    @property
    def storage(self):
        """The underlying ndarray or csr_array (read-only)."""
        return self._csr if self.is_sparse else self._dense

    def frobenius_norm(self):
        data = self._csr.data if self.is_sparse else self._dense
        return float(np.sqrt(np.dot(data.ravel(), data.ravel())))

    def abs(self):
        """Entrywise absolute value, same storage."""
        if self.is_sparse:
            return Matrix.from_sparse(abs(self._csr))
        return Matrix.from_dense(np.abs(self._dense))

    def transpose(self):
        if self.is_sparse:
            return Matrix.from_sparse(self._csr.T)
        return Matrix.from_dense(self._dense.T)

    def toarray(self):
        if self.is_sparse:
            return self._csr.toarray()
        return np.array(self._dense)

    def tosparse(self):
        if self.is_sparse:
            return self
        return Matrix.from_sparse(sp.csr_array(self._dense))

    def row(self, i):
        """Row i as a dense length-n vector (a fresh array)."""
        check_row(self, i)
        if self.is_sparse:
            out = np.zeros(self.n)
            lo, hi = self._csr.indptr[i], self._csr.indptr[i + 1]
            out[self._csr.indices[lo:hi]] = self._csr.data[lo:hi]
            return out
        return np.array(self._dense[i])

    def row_entries(self, i):
        """Stored (columns, values) of row i; dense rows report every column."""
        check_row(self, i)
        if self.is_sparse:
            lo, hi = self._csr.indptr[i], self._csr.indptr[i + 1]
            return self._csr.indices[lo:hi], self._csr.data[lo:hi]
        return np.arange(self.n), self._dense[i]

    def __repr__(self):
        return 'Matrix(shape={}, storage={}, nnz={})'.format(
            self.shape, 'csr' if self.is_sparse else 'dense', self.nnz)


@dataclass(frozen=True)
class RowNormCache:
    """Squared row norms, their sum and the prefix sums used for norm-weighted draws."""
    norms_sq: np.ndarray
    frobenius_sq: float
    norms: np.ndarray
    cumulative: np.ndarray

    @property
    def m(self):
        return len(self.norms_sq)

    @property
    def mu(self):
        """Population mean of the squared row norms."""
        return self.frobenius_sq / len(self.norms_sq)


def check_row(matrix, i):
    if not 0 <= i < matrix.m:
        raise IndexError('row index {} out of range for {} rows'.format(i, matrix.m))


def _check_length(vector, expected, what):
    if vector.ndim != 1 or vector.shape[0] != expected:
        raise DimensionMismatch(expected, vector.shape[0] if vector.ndim else 0, what)


def row_norms(matrix):
    """Compute every ||A_(i)||_2^2 and ||A||_F^2 once, up front.

    Raises `ZeroNormRow` for the first row whose norm vanishes.
    """
    if matrix.is_sparse:
        csr = matrix.storage
        norms_sq = np.asarray(csr.multiply(csr).sum(axis=1)).ravel().astype(np.float64)
    else:
        dense = matrix.storage
        norms_sq = np.einsum('ij,ij->i', dense, dense)
    zero = np.flatnonzero(norms_sq <= 0.)
    if len(zero):
        raise ZeroNormRow(int(zero[0]))
    cumulative = np.cumsum(norms_sq)
    return RowNormCache(norms_sq=_freeze(norms_sq),
                        frobenius_sq=float(cumulative[-1]),
                        norms=_freeze(np.sqrt(norms_sq)),
                        cumulative=_freeze(cumulative))


def row_dot(matrix, i, x):
    """A_(i) . x; sparse rows touch only their stored entries."""
    cols, vals = matrix.row_entries(i)
    if matrix.is_sparse:
        return float(np.dot(vals, x[cols]))
    return float(np.dot(vals, x))


def matvec(matrix, x):
    x = np.asarray(x, dtype=np.float64)
    _check_length(x, matrix.n, 'x')
    return np.asarray(matrix.storage @ x, dtype=np.float64).ravel()


def rmatvec(matrix, y):
    """A^T y (the Hermitian transpose for real scalars)."""
    y = np.asarray(y, dtype=np.float64)
    _check_length(y, matrix.m, 'y')
    return np.asarray(matrix.storage.T @ y, dtype=np.float64).ravel()


def axpy_row(matrix, i, alpha, x):
    """x <- x + alpha * A_(i)^T, in place."""
    cols, vals = matrix.row_entries(i)
    if alpha == 0.:
        return
    if matrix.is_sparse:
        x[cols] += alpha * vals
    else:
        x += alpha * vals


def row_gram(matrix, i):
    """A . A_(i)^T, the i-th column of A A^T (one apply of A)."""
    return matvec(matrix, matrix.row(i))
