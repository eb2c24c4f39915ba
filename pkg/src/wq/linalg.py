"""Cholesky factorization for covariance matrices that may be singular."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

JITTERS = (0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8)


class CholeskyError(np.linalg.LinAlgError):
    def __init__(self, minor: int, msg: str = ""):
        self.minor = minor
        super().__init__(msg or f"leading minor of order {minor} is not positive definite")


@dataclass(frozen=True)
class Factor:
    L: np.ndarray          # L @ L.T approximates the input (plus jitter * I)
    jitter: float
    pivoted: bool
    rank: int


def stable_cholesky(A, jitters=JITTERS, rank_tol: float = 1e-12) -> Factor:
    """Lower Cholesky factor with diagonal jitter escalation.

    Jitters are absolute amounts added to the diagonal.  If even the largest
    fails, a pivoted factorization of the positive-rank block is returned
    (``L`` is then lower-triangular only after the recorded permutation).
    A matrix that is not positive semidefinite raises ``CholeskyError``
    naming the first leading minor that failed.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    if d == 0:
        return Factor(np.zeros((0, 0)), 0.0, False, 0)
    eye = np.eye(d)
    minor = 0
    for jit in jitters:
        c, info = lapack.dpotrf(A + jit * eye, lower=1, clean=1)
        if info == 0:
            return Factor(np.tril(c), jit, False, d)
        minor = info
    c, piv, rank, info = lapack.dpstrf(A, lower=1, tol=rank_tol * max(1.0, float(np.max(np.diag(A)))))
    if info < 0:
        raise CholeskyError(minor, f"pivoted factorization rejected its input (info={info})")
    Lp = np.tril(c)
    Lp[:, rank:] = 0.0
    perm = piv - 1
    L = np.zeros_like(Lp)
    L[perm, :] = Lp
    resid = np.max(np.abs(L @ L.T - A))
    if resid > 1e-8 * max(1.0, float(np.max(np.abs(A)))):
        raise CholeskyError(minor, f"leading minor of order {minor} failed and the pivoted "
                                   f"factorization leaves residual {resid:.3g}; matrix is not PSD")
    return Factor(L, 0.0, True, int(rank))
