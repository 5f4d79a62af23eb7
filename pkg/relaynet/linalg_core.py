"""Complex Hermitian linear algebra used by the capacity computations.

Covers the log-det capacity of a MIMO channel with i.i.d. unit-power inputs,
characteristic polynomials (Faddeev-LeVerrier), principal submatrices,
elementary symmetric polynomials, and a checker for the identity relating the
characteristic polynomials of all k x k principal submatrices to a derivative
of the full characteristic polynomial.
"""
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly

from utils.error_handler import CapExceededError, IndexRangeError, ValidationError
from utils.helpers import as_complex_matrix, frozen
from utils.validation_constants import IDENTITY_RTOL, MAX_SUBSET_ORACLE_DIM


@dataclass(frozen=True)
class MimoChannel:
    """n_r x n_t channel matrix: rows are receive antennas, columns transmit antennas."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = as_complex_matrix(self.matrix, name="channel")
        if matrix.shape[0] < 1 or matrix.shape[1] < 1:
            raise ValidationError(f"channel must have at least one row and column, got {matrix.shape}")
        object.__setattr__(self, 'matrix', frozen(matrix))

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def submatrix(self, tx: Sequence[int], rx: Sequence[int]) -> 'MimoChannel':
        return MimoChannel(self.matrix[np.ix_(list(rx), list(tx))])

    def transpose(self) -> 'MimoChannel':
        """Reciprocal channel H^dagger (transmitters and receivers swap roles)."""
        return MimoChannel(self.matrix.conj().T)


@dataclass(frozen=True)
class RealPolynomial:
    """coeffs[j] is the coefficient of lambda**j."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if coeffs.ndim != 1 or not np.all(np.isfinite(coeffs)):
            raise ValidationError("polynomial coefficients must be a finite 1-D vector")
        object.__setattr__(self, 'coeffs', frozen(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return npoly.polyval(x, self.coeffs)


IndexSet = Tuple[int, ...]
MatrixLike = Union[MimoChannel, np.ndarray, Sequence]


def index_set(indices, bound: int) -> IndexSet:
    """Sorted duplicate-free indices, each within [0, bound)."""
    result = tuple(sorted(set(int(i) for i in indices)))
    if len(result) != len(indices):
        raise ValidationError(f"index set {list(indices)} has duplicates")
    for i in result:
        if not 0 <= i < bound:
            raise IndexRangeError(f"index {i} outside [0, {bound})")
    return result


def _matrix(H: MatrixLike) -> np.ndarray:
    if isinstance(H, MimoChannel):
        return H.matrix
    return as_complex_matrix(H, name="channel")


def _capacity_from_singular_values(sigma: np.ndarray) -> np.ndarray:
    # I + H H^dagger is never formed
    return np.sum(np.log1p(sigma ** 2), axis=-1) / math.log(2.0)


def mimo_capacity(H: MatrixLike) -> float:
    """log2 det(I + H H^dagger) as the sum of log2(1 + sigma^2) over the singular values of H."""
    matrix = _matrix(H)
    if matrix.size == 0:
        return 0.0
    return float(_capacity_from_singular_values(np.linalg.svd(matrix, compute_uv=False)))


def mimo_capacity_batch(stack: np.ndarray) -> np.ndarray:
    """mimo_capacity over the last two axes of a (..., n_r, n_t) stack."""
    stack = np.asarray(stack, dtype=np.complex128)
    if stack.shape[-1] == 0 or stack.shape[-2] == 0:
        return np.zeros(stack.shape[:-2])
    return _capacity_from_singular_values(np.linalg.svd(stack, compute_uv=False))


def _hermitian(A) -> np.ndarray:
    matrix = as_complex_matrix(A, name="matrix")
    if matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f"matrix must be square, got {matrix.shape}")
    return (matrix + matrix.conj().T) / 2


def char_poly(A) -> RealPolynomial:
    """Monic det(lambda I - A) of a Hermitian matrix by Faddeev-LeVerrier."""
    matrix = _hermitian(A)
    n = matrix.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    identity = np.eye(n)
    m = np.zeros_like(matrix)
    for k in range(1, n + 1):
        m = matrix @ m + coeffs[n - k + 1] * identity
        coeffs[n - k] = -np.trace(matrix @ m).real / k
    return RealPolynomial(coeffs)


def principal_submatrix(A, indices) -> np.ndarray:
    """Rows and columns ``indices`` (0-based) of a square matrix."""
    matrix = as_complex_matrix(A, name="matrix")
    if matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f"matrix must be square, got {matrix.shape}")
    if len(indices) == 0:
        raise ValidationError("principal submatrix needs a nonempty index set")
    idx = list(index_set(indices, matrix.shape[0]))
    return matrix[np.ix_(idx, idx)]


def elementary_symmetric(values, k: int) -> float:
    """e_k(values) by the one-value-at-a-time product recurrence; e_0 = 1."""
    values = np.asarray(values, dtype=float).ravel()
    if not 0 <= k <= values.size:
        raise ValidationError(f"k must lie in [0, {values.size}], got {k}")
    partial = np.zeros(k + 1)
    partial[0] = 1.0
    for i, v in enumerate(values):
        for j in range(min(i + 1, k), 0, -1):
            partial[j] += v * partial[j - 1]
    return float(partial[k])


def poly_derivative(p: RealPolynomial, m: int) -> RealPolynomial:
    """m-th formal derivative; the zero polynomial once m exceeds the degree."""
    if m < 0:
        raise ValidationError(f"derivative order must be >= 0, got {m}")
    if m == 0:
        return RealPolynomial(p.coeffs)
    return RealPolynomial(npoly.polyder(p.coeffs, m))


@dataclass(frozen=True)
class SubmatrixIdentityReport:
    n: int
    k: int
    poly_residual: float
    scalar_residual: float
    scale: float

    @property
    def tolerance(self) -> float:
        return IDENTITY_RTOL * self.scale

    @property
    def holds(self) -> bool:
        return self.poly_residual <= self.tolerance and self.scalar_residual <= self.tolerance


def verify_submatrix_identity(A, k: int, max_dim: int = MAX_SUBSET_ORACLE_DIM) -> SubmatrixIdentityReport:
    """Residuals of (n-k)! * sum_{|L|=k} rho_L = rho^(n-k) and of the constant-term form.

    The constant-term check compares the signed sum of k x k principal minors
    against e_k of the eigenvalues; for a positive definite matrix the signed
    sum equals the sum of magnitudes of the constant coefficients.
    """
    matrix = _hermitian(A)
    n = matrix.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in [1, {n}], got {k}")
    if n > max_dim:
        raise CapExceededError(f"submatrix identity enumerates C(n, k) subsets; n = {n} exceeds the cap {max_dim}")

    rho = char_poly(matrix)
    rhs = poly_derivative(rho, n - k).coeffs
    lhs = np.zeros(k + 1)
    minor_sum = 0.0
    sign = (-1) ** k
    for subset in combinations(range(n), k):
        sub = char_poly(matrix[np.ix_(subset, subset)]).coeffs
        lhs += sub
        minor_sum += sign * sub[0]
    lhs *= math.factorial(n - k)

    eigenvalues = np.linalg.eigvalsh(matrix)
    scale = 1.0 + max(np.max(np.abs(rho.coeffs)), np.max(np.abs(rhs)))
    return SubmatrixIdentityReport(
        n=n,
        k=k,
        poly_residual=float(np.max(np.abs(lhs - rhs))),
        scalar_residual=abs(minor_sum - elementary_symmetric(eigenvalues, k)),
        scale=float(scale),
    )
