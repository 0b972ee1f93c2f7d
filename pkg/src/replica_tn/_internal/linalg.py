"""Small dense linear-algebra helpers for the MPS engine."""

from __future__ import annotations

import logging

import numpy as np
import scipy.linalg

from ..types import TruncationParams

logger = logging.getLogger(__name__)

# Relative width of a singular-value multiplet that truncation never splits.
DEGENERACY_RTOL = 1e-12


def svd(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD, falling back to the slower gesvd driver when gesdd fails to converge."""
    try:
        return scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesdd", check_finite=False)
    except np.linalg.LinAlgError:
        logger.debug("gesdd did not converge on %s matrix, retrying with gesvd", a.shape)
        return scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd", check_finite=False)


def truncation_rank(s: np.ndarray, trunc: TruncationParams) -> tuple[int, float]:
    """Number of singular values to keep and the discarded weight.

    ``s`` must be sorted in descending order. Values at or below
    ``cutoff · s[0]`` are dropped, the remainder is capped at ``chi_max``,
    and the cap is widened until it does not split a degenerate multiplet.
    The discarded weight is the dropped fraction of Σ s².
    """
    if s.size == 0 or s[0] <= 0.0:
        return 1, 0.0
    keep = int(np.count_nonzero(s > trunc.cutoff * s[0]))
    keep = max(keep, 1)
    if keep > trunc.chi_max:
        keep = trunc.chi_max
        boundary = s[keep - 1]
        while keep < s.size and s[keep] >= boundary * (1.0 - DEGENERACY_RTOL):
            keep += 1
        if keep > trunc.chi_max:
            logger.warning("Kept %d > chi_max=%d singular values to preserve a degenerate multiplet",
                           keep, trunc.chi_max)
    total = float(np.dot(s, s))
    discarded = float(np.dot(s[keep:], s[keep:])) / total if keep < s.size else 0.0
    return keep, discarded


def qr_right(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split ``(Dl, n, Dr)`` into a left-isometric tensor and an ``R`` for the right neighbour."""
    dl, n, dr = a.shape
    q, r = np.linalg.qr(a.reshape(dl * n, dr))
    return q.reshape(dl, n, q.shape[1]), r


def qr_left(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split ``(Dl, n, Dr)`` into an ``L`` for the left neighbour and a right-isometric tensor."""
    dl, n, dr = a.shape
    q, r = np.linalg.qr(a.reshape(dl, n * dr).T)
    return r.T, q.T.reshape(q.shape[1], n, dr)
