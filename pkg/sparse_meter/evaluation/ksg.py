"""k-nearest-neighbor (KSG) estimate of mutual information.

The first KSG estimator with max-norm distances::

    I = psi(k) + psi(N) - mean(psi(n_x + 1) + psi(n_z + 1))

where, for each point, the radius is the distance to its k-th neighbor in the joint
space and n_x, n_z count the other points strictly inside that radius in each
marginal space.

Every coordinate is first replaced by the normal score of its rank, so the estimate
depends only on the order of the values in each coordinate and does not change under
strictly increasing transforms of either variable.
"""
import logging
from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from scipy.special import digamma, ndtri
from scipy.stats import rankdata

logger = logging.getLogger(__name__)

DEFAULT_K = 4
JITTER = 1e-6
METHODS = ('brute', 'tree')


def _as_samples(values, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, np.newaxis]
    if values.ndim != 2:
        raise ValueError(f'{name} must be [N x D], got shape {values.shape}')
    if not np.all(np.isfinite(values)):
        raise ValueError(f'{name} has non-finite values.')
    return values


def normal_scores(values) -> np.ndarray:
    """Replace each column by the standard normal quantiles of its ranks.

    Rank r of N maps to ``ndtri(r / (N + 1))``. Equal values share their average
    rank and so keep equal scores. A constant column maps to zeros.
    """
    values = _as_samples(values, 'values')
    ranks = rankdata(values, method='average', axis=0)
    return ndtri(ranks / (len(values) + 1))


def _duplicate_error(count: int) -> ValueError:
    return ValueError(
        f'{count} point(s) have a zero distance to their k-th joint neighbor. '
        'Duplicate samples break the estimator; add a small jitter to discrete '
        'coordinates first.'
    )


def _counts_brute(x: np.ndarray, z: np.ndarray, k: int,
                  chunk_size: int) -> Tuple[np.ndarray, np.ndarray]:
    n = len(x)
    n_x = np.empty(n, dtype=np.int64)
    n_z = np.empty(n, dtype=np.int64)
    for start in range(0, n, chunk_size):
        rows = np.arange(start, min(start + chunk_size, n))
        dx = cdist(x[rows], x, 'chebyshev')
        dz = cdist(z[rows], z, 'chebyshev')
        joint = np.maximum(dx, dz)
        joint[np.arange(len(rows)), rows] = np.inf
        eps = np.partition(joint, k - 1, axis=1)[:, k - 1]
        if np.any(eps == 0):
            raise _duplicate_error(int(np.count_nonzero(eps == 0)))
        # the point itself is at distance 0 in both marginals
        n_x[rows] = np.count_nonzero(dx < eps[:, None], axis=1) - 1
        n_z[rows] = np.count_nonzero(dz < eps[:, None], axis=1) - 1
    return n_x, n_z


def _counts_tree(x: np.ndarray, z: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    joint = np.hstack([x, z])
    distances, _ = cKDTree(joint).query(joint, k=k + 1, p=np.inf)
    eps = distances[:, k]
    if np.any(eps == 0):
        raise _duplicate_error(int(np.count_nonzero(eps == 0)))
    # query_ball_point is inclusive, so shrink the radius by one ulp
    radius = np.nextafter(eps, 0)
    n_x = cKDTree(x).query_ball_point(x, radius, p=np.inf, return_length=True) - 1
    n_z = cKDTree(z).query_ball_point(z, radius, p=np.inf, return_length=True) - 1
    return np.asarray(n_x, dtype=np.int64), np.asarray(n_z, dtype=np.int64)


def _estimate(x: np.ndarray, z: np.ndarray, k: int, method: str,
              chunk_size: int) -> float:
    """KSG estimate on samples that are already transformed."""
    n = len(x)
    if method == 'brute':
        n_x, n_z = _counts_brute(x, z, k, chunk_size)
    elif method == 'tree':
        n_x, n_z = _counts_tree(x, z, k)
    else:
        raise ValueError(f'Unknown method "{method}". Valid methods are {METHODS}.')
    estimate = digamma(k) + digamma(n) - np.mean(digamma(n_x + 1) + digamma(n_z + 1))
    estimate = float(estimate)
    logger.debug('ksg estimate %.6f nats (N=%d, k=%d)', estimate, n, k)
    return estimate


def _paired(x, z, k: int) -> Tuple[np.ndarray, np.ndarray]:
    x, z = _as_samples(x, 'x'), _as_samples(z, 'z')
    n = len(x)
    if len(z) != n:
        raise ValueError(f'x and z must be paired: {n} vs {len(z)} samples.')
    if not 1 <= k < n:
        raise ValueError(f'k must be in [1, N): k={k}, N={n}')
    return x, z


def ksg_mi(x, z, k: int = DEFAULT_K, method: str = 'brute', clamp: bool = True,
           chunk_size: int = 1024) -> float:
    """Estimate the mutual information between paired samples in nats.

    Args:
        x: Samples [N x Dx] (or [N]).
        z: Samples [N x Dz] (or [N]) paired with x.
        k: Neighbor count.
        method: ``brute`` for exact pairwise distances or ``tree`` for a k-d tree.
            Both give the same neighbor counts.
        clamp: Report negative estimates as 0.
        chunk_size: Rows of the pairwise distance matrix held in memory at once.

    Returns:
        float -- the estimate in nats.
    """
    x, z = _paired(x, z, k)
    estimate = _estimate(normal_scores(x), normal_scores(z), k, method, chunk_size)
    return max(estimate, 0.0) if clamp else estimate


def leakage_estimate(x, z, k: int = DEFAULT_K, seed: int = 0, jitter: float = JITTER,
                     method: str = 'brute') -> float:
    """Mutual information between label sequences and released sequences in nats.

    Each sequence is one point. Both spaces are mapped to normal scores per step and
    the binary labels then get Uniform(0, jitter) noise so no two points coincide.

    Args:
        x: Occupancy labels [N x T].
        z: Released data [N x T].
        k: Neighbor count.
        seed: Seed of the jitter.
        jitter: Width of the label jitter.
        method: Neighbor search, ``brute`` or ``tree``.

    """
    x, z = _paired(x, z, k)
    x = normal_scores(x)
    rng = np.random.default_rng(seed)
    x = x + rng.uniform(0.0, jitter, size=x.shape)
    return max(_estimate(x, normal_scores(z), k, method, 1024), 0.0)
