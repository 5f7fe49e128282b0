""" Cholesky factorization with diagonal jitter escalation and the solves built on it """

import logging
import numpy as np
import scipy.linalg as la

# Jitter is relative to the mean diagonal entry of the matrix being factored
JITTER_START = 1e-10
JITTER_GROWTH = 10.0
JITTER_MAX = 1e-4


class NumericError(ArithmeticError):
    "Matrix could not be factored or a computation produced non-finite values"


def jitchol(A: np.ndarray, context: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix, adding diagonal jitter if needs be.

    Args:
        A (np.ndarray): [k x k] symmetric matrix
        context (str, optional): Name used in log and error messages. Defaults to "matrix".

    Raises:
        NumericError: The matrix is not positive definite even with the largest jitter

    Returns:
        np.ndarray: Lower triangular L with A (+ jitter) = L L^T
    """
    A = np.asarray(A, dtype=np.float64)
    if not np.all(np.isfinite(A)):
        raise NumericError(f"{context} contains non-finite entries")
    try:
        return la.cholesky(A, lower=True)
    except la.LinAlgError:
        pass

    diag_mean = float(np.mean(np.diag(A)))
    if diag_mean <= 0:
        raise NumericError(f"{context} has non-positive mean diagonal {diag_mean}")
    di = np.diag_indices(A.shape[0])
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1 + 1e-9):
        A_jit = A.copy()
        A_jit[di] += jitter * diag_mean
        try:
            L = la.cholesky(A_jit, lower=True)
            logging.warning(f"{context} factored after adding jitter {jitter:.1e} x mean diagonal")
            return L
        except la.LinAlgError:
            jitter *= JITTER_GROWTH
    raise NumericError(f"{context} not positive definite after jitter up to {JITTER_MAX:.0e} x mean diagonal")


def cho_solve_lower(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    return la.cho_solve((L, True), B, check_finite=False)


def inverse_quadratic_forms(L: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Row-wise g^T A^{-1} g for every row g of G, given the lower Cholesky factor of A"""
    W = la.solve_triangular(L, np.atleast_2d(G).T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", W, W)
