# lkengine/geometry/blocklin.py
"""Small dense linear algebra: guarded inverses, 2-jets of matrix functions
and the eps-scaled block-inverse expansion used for collapsing metrics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from lkengine.errors import InputError, SingularMatrixError

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class BlockSplit:
    """Fiber (vertical) and base (horizontal) coordinate indices of a chart"""
    fiber_dims: tuple
    base_dims: tuple

    def __post_init__(self):
        fiber, base = tuple(self.fiber_dims), tuple(self.base_dims)
        if not fiber or not base:
            raise InputError("a block split needs at least one fiber and one base coordinate")
        if set(fiber) & set(base):
            raise InputError(f"fiber and base coordinates overlap: {sorted(set(fiber) & set(base))}")
        if sorted(fiber + base) != list(range(len(fiber) + len(base))):
            raise InputError("fiber and base coordinates must cover 0..n-1")
        object.__setattr__(self, "fiber_dims", fiber)
        object.__setattr__(self, "base_dims", base)

    @property
    def n(self) -> int:
        return len(self.fiber_dims) + len(self.base_dims)

    @property
    def fiber_count(self) -> int:
        return len(self.fiber_dims)

    @property
    def base_count(self) -> int:
        return len(self.base_dims)


def condition_estimate(m: np.ndarray) -> np.ndarray:
    """2-norm condition number after symmetric Jacobi equilibration.

    Scaling by the diagonal removes the coordinate-induced part of the
    conditioning (sin^2 factors near sphere poles) and keeps the genuine one.
    """
    m = np.asarray(m, dtype=float)
    d = np.sqrt(np.abs(np.diagonal(m, axis1=-2, axis2=-1)))
    d = np.where(d > 0.0, d, 1.0)
    scaled = m / (d[..., :, None] * d[..., None, :])
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(scaled)
    return np.where(np.isfinite(cond), cond, np.inf)


def det(m: np.ndarray) -> np.ndarray:
    return np.linalg.det(np.asarray(m, dtype=float))


def invert(m: np.ndarray, symmetric: bool = True) -> np.ndarray:
    """Inverse of a (batch of) small matrices, refusing ill-conditioned input.

    Raises:
        SingularMatrixError: when the equilibrated condition estimate exceeds 1e12
    """
    m = np.asarray(m, dtype=float)
    cond = condition_estimate(m)
    worst = float(np.max(cond)) if cond.size else 0.0
    if not worst <= CONDITION_LIMIT:
        raise SingularMatrixError(f"matrix is singular or ill-conditioned (condition estimate {worst:.3g})", worst)
    d = np.sqrt(np.abs(np.diagonal(m, axis1=-2, axis2=-1)))
    d = np.where(d > 0.0, d, 1.0)
    scale = 1.0 / (d[..., :, None] * d[..., None, :])
    inv = np.linalg.inv(m * scale) * scale
    if symmetric:
        inv = 0.5 * (inv + np.swapaxes(inv, -1, -2))
    return inv


@dataclass(frozen=True)
class MatrixJet:
    """A matrix-valued function with first and second partial derivatives.

    Shapes: value B+(r, c), first B+(n, r, c), second B+(n, n, r, c).
    """
    value: np.ndarray
    first: np.ndarray
    second: np.ndarray

    @classmethod
    def from_metric_jet(cls, mj):
        return cls(mj.g, mj.dg, mj.ddg)

    @classmethod
    def identity(cls, size: int, like: "MatrixJet"):
        batch = like.value.shape[:-2]
        n = like.first.shape[-3]
        value = np.broadcast_to(np.eye(size), batch + (size, size)).copy()
        return cls(value, np.zeros(batch + (n, size, size)), np.zeros(batch + (n, n, size, size)))

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> "MatrixJet":
        r, c = np.asarray(rows), np.asarray(cols)
        index = np.ix_(r, c)
        return MatrixJet(
            self.value[..., index[0], index[1]],
            self.first[..., index[0], index[1]],
            self.second[..., index[0], index[1]],
        )

    @property
    def T(self) -> "MatrixJet":
        return MatrixJet(np.swapaxes(self.value, -1, -2), np.swapaxes(self.first, -1, -2), np.swapaxes(self.second, -1, -2))

    def __add__(self, other):
        return MatrixJet(self.value + other.value, self.first + other.first, self.second + other.second)

    def __sub__(self, other):
        return MatrixJet(self.value - other.value, self.first - other.first, self.second - other.second)

    def scale(self, c: float) -> "MatrixJet":
        return MatrixJet(c * self.value, c * self.first, c * self.second)

    def __matmul__(self, other):
        a, b = self, other
        value = a.value @ b.value
        first = a.first @ b.value[..., None, :, :] + a.value[..., None, :, :] @ b.first
        second = (
            a.second @ b.value[..., None, None, :, :]
            + a.first[..., :, None, :, :] @ b.first[..., None, :, :, :]
            + a.first[..., None, :, :, :] @ b.first[..., :, None, :, :]
            + a.value[..., None, None, :, :] @ b.second
        )
        return MatrixJet(value, first, second)

    def inverse(self, symmetric: bool = True) -> "MatrixJet":
        w = invert(self.value, symmetric=symmetric)
        wb = w[..., None, :, :]
        left = wb @ self.first            # W A_p
        middle = left @ wb                # W A_p W
        first = -middle
        second = (
            left[..., None, :, :, :] @ middle[..., :, None, :, :]
            + left[..., :, None, :, :] @ middle[..., None, :, :, :]
            - w[..., None, None, :, :] @ self.second @ w[..., None, None, :, :]
        )
        if symmetric:
            first = 0.5 * (first + np.swapaxes(first, -1, -2))
            second = 0.5 * (second + np.swapaxes(second, -1, -2))
        return MatrixJet(w, first, second)


@dataclass(frozen=True)
class BlockInverse:
    inverse: np.ndarray
    upper_left: np.ndarray
    upper_right: np.ndarray
    lower_left: np.ndarray
    lower_right: np.ndarray
    leading_upper_left: np.ndarray
    leading_lower_right: np.ndarray


def lemma_block_inverse(A, B, C, D, eps: float) -> BlockInverse:
    """Inverse of [[eps*A, eps*B], [eps*C, D]] through its closed factorization.

    With X = A^-1 B, Y = D^-1 C and S = (I - eps*X*Y)^-1 the blocks are
    eps^-1 S A^-1, -S X D^-1, -Y S A^-1 and (I + eps*Y S X) D^-1.
    """
    if not eps > 0.0:
        raise InputError(f"eps must be positive, got {eps}")
    A, B, C, D = (np.asarray(x, dtype=float) for x in (A, B, C, D))
    a_inv = invert(A, symmetric=False)
    d_inv = invert(D, symmetric=False)
    X = fsum_matmul(a_inv, B)
    Y = fsum_matmul(d_inv, C)
    eye_a = np.eye(A.shape[-1])
    S = invert(eye_a - eps * fsum_matmul(X, Y), symmetric=False)
    upper_left = fsum_matmul(S, a_inv) / eps
    upper_right = -fsum_matmul(S, X, d_inv)
    lower_left = -fsum_matmul(Y, S, a_inv)
    lower_right = fsum_matmul(np.eye(D.shape[-1]) + eps * fsum_matmul(Y, S, X), d_inv)
    inverse = np.block([[upper_left, upper_right], [lower_left, lower_right]])
    return BlockInverse(inverse, upper_left, upper_right, lower_left, lower_right, a_inv / eps, d_inv)


def assemble_scaled(A, B, C, D, eps: float) -> np.ndarray:
    return np.block([[eps * np.asarray(A), eps * np.asarray(B)], [eps * np.asarray(C), np.asarray(D)]])


@dataclass(frozen=True)
class BlockInverseEstimate:
    """Log-log slopes of the block-inverse deviations over an eps grid"""
    eps_grid: tuple
    upper_left_slope: float
    off_diagonal_slope: float
    lower_right_slope: float
    upper_left_sup: float
    off_diagonal_sup: float
    dense_agreement: float


def block_inverse_report(A, B, C, D, eps_grid: Sequence[float]) -> BlockInverseEstimate:
    """Measure the O(1), O(1) and O(eps) deviation structure of one block matrix"""
    eps_grid = tuple(float(e) for e in eps_grid)
    upper_left, off_diagonal, lower_right, agreement = [], [], [], []
    for eps in eps_grid:
        result = lemma_block_inverse(A, B, C, D, eps)
        upper_left.append(np.max(np.abs(result.upper_left - result.leading_upper_left)))
        off_diagonal.append(max(np.max(np.abs(result.upper_right)), np.max(np.abs(result.lower_left))))
        lower_right.append(np.max(np.abs(result.lower_right - result.leading_lower_right)))
        dense = np.linalg.inv(assemble_scaled(A, B, C, D, eps))
        agreement.append(np.max(np.abs(dense - result.inverse)) / max(1.0, np.max(np.abs(dense))))
    log_eps = np.log(eps_grid)

    def slope(values):
        values = np.asarray(values)
        if np.any(values <= 0.0):
            return 0.0
        return float(np.polyfit(log_eps, np.log(values), 1)[0])

    return BlockInverseEstimate(
        eps_grid,
        slope(upper_left),
        slope(off_diagonal),
        slope(lower_right),
        float(max(upper_left)),
        float(max(off_diagonal)),
        float(max(agreement)),
    )


def random_blocks(rng: np.random.Generator, p: int, q: int):
    """Well-conditioned random blocks for the block-inverse harness"""
    M, N = rng.normal(size=(p, p)), rng.normal(size=(q, q))
    A = M @ M.T / p + np.eye(p)
    D = N @ N.T / q + np.eye(q)
    B = 0.5 * rng.normal(size=(p, q))
    C = 0.5 * rng.normal(size=(q, p))
    return A, B, C, D


def fsum_matmul(*factors) -> np.ndarray:
    """Product of 2-D matrices, left to right, with every entry an exactly rounded sum"""
    result = np.asarray(factors[0], dtype=float)
    for factor in factors[1:]:
        factor = np.asarray(factor, dtype=float)
        if result.ndim != 2 or factor.ndim != 2 or result.shape[1] != factor.shape[0]:
            raise InputError(f"cannot multiply shapes {result.shape} and {factor.shape}")
        product = np.empty((result.shape[0], factor.shape[1]))
        for i in range(result.shape[0]):
            for j in range(factor.shape[1]):
                product[i, j] = math.fsum(result[i, :] * factor[:, j])
        result = product
    return result


def max_residual(m: np.ndarray, m_inv: np.ndarray) -> float:
    """max |m m^-1 - I| with compensated entries"""
    residual = fsum_matmul(m, m_inv) - np.eye(np.shape(m)[-1])
    return float(np.max(np.abs(residual)))
