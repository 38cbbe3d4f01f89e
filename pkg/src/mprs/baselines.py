"""Reference interpolators: inverse distance weighting and ordinary kriging.

Both use every sample for every query (no search neighbourhood).
"""

from __future__ import annotations

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from .core import InsufficientSamples, InvalidParameter, MPRSError, PointSet
from .fields import WmParams, wm_covariance

_CHUNK = 4096


class SingularSystem(MPRSError):
    """Kriging system cannot be solved; ``indices`` lists the offending samples."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = list(indices)


def _check(samples: PointSet, queries: PointSet):
    if samples.values is None:
        raise InvalidParameter("samples carry no values")
    if samples.n < 1:
        raise InsufficientSamples("no samples")
    if samples.dim != queries.dim:
        raise InvalidParameter("dimension mismatch between samples and queries")


def idw_weights(samples: PointSet, queries: PointSet, power: float = 2.0) -> np.ndarray:
    """``(P, N)`` Shepard weights, each row summing to one.

    A query sitting on one or more samples gets equal weight on exactly
    those samples.
    """
    if not power > 0:
        raise InvalidParameter("power must be positive")
    d = cdist(queries.coords, samples.coords)
    hit = d == 0.0
    with np.errstate(divide="ignore"):
        w = d ** -power
    exact = hit.any(axis=1)
    w[exact] = hit[exact].astype(float)
    return w / w.sum(axis=1, keepdims=True)


def idw_predict(samples: PointSet, queries: PointSet, power: float = 2.0) -> np.ndarray:
    _check(samples, queries)
    out = np.empty(queries.n)
    for s in range(0, queries.n, _CHUNK):
        q = queries.subset(slice(s, s + _CHUNK))
        out[s:s + q.n] = idw_weights(samples, q, power) @ samples.values
    return out


def _duplicate_groups(coords):
    _, inverse, counts = np.unique(coords, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    bad = np.flatnonzero(counts[inverse] > 1)
    return bad


class OrdinaryKriging:
    """Ordinary kriging with a fixed Whittle-Matern covariance.

    The sample covariance block is factorized once; each query then costs
    two triangular solves.
    """

    def __init__(self, samples: PointSet, cov: WmParams):
        if samples.values is None:
            raise InvalidParameter("samples carry no values")
        dup = _duplicate_groups(samples.coords)
        if dup.size:
            raise SingularSystem("duplicate sample sites make the kriging matrix singular", dup)
        self.samples = samples
        self.cov = cov
        K = wm_covariance(cdist(samples.coords, samples.coords), cov)
        try:
            self._cho = linalg.cho_factor(K, lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise SingularSystem(f"sample covariance matrix is not positive definite: {exc}") from exc
        ones = np.ones(samples.n)
        self._k_inv_1 = linalg.cho_solve(self._cho, ones)
        self._denom = float(ones @ self._k_inv_1)

    def weights(self, queries: PointSet, dist=None):
        """Weights ``(P, N)``, Lagrange multipliers ``(P,)`` and RHS ``(P, N)``."""
        if dist is None:
            dist = cdist(queries.coords, self.samples.coords)
        k = wm_covariance(dist, self.cov)
        k_inv_k = linalg.cho_solve(self._cho, k.T).T
        # K w + mu 1 = k, 1^T w = 1
        mu = (k_inv_k.sum(axis=1) - 1.0) / self._denom
        w = k_inv_k - mu[:, None] * self._k_inv_1[None, :]
        return w, mu, k

    def predict(self, queries: PointSet):
        if queries.dim != self.samples.dim:
            raise InvalidParameter("dimension mismatch between samples and queries")
        mean = np.empty(queries.n)
        var = np.empty(queries.n)
        c0 = self.cov.sigma ** 2
        for s in range(0, queries.n, _CHUNK):
            q = queries.subset(slice(s, s + _CHUNK))
            d = cdist(q.coords, self.samples.coords)
            w, mu, k = self.weights(q, d)
            m = w @ self.samples.values
            v = np.maximum(c0 - np.einsum("ij,ij->i", w, k) - mu, 0.0)
            # exact interpolation at sample sites
            rows, cols = np.nonzero(d == 0.0)
            m[rows] = self.samples.values[cols]
            v[rows] = 0.0
            mean[s:s + q.n], var[s:s + q.n] = m, v
        return mean, var


def ok_weights(samples: PointSet, queries: PointSet, cov: WmParams) -> np.ndarray:
    return OrdinaryKriging(samples, cov).weights(queries)[0]


def ok_predict(samples: PointSet, queries: PointSet, cov: WmParams):
    """Ordinary kriging predictions and kriging variances at ``queries``."""
    _check(samples, queries)
    return OrdinaryKriging(samples, cov).predict(queries)
