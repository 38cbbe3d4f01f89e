"""Whittle-Matern random fields on scattered sites.

Fields are drawn by dense Cholesky factorization of the site covariance
matrix, which is exact and affordable for a few thousand sites.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, special
from scipy.spatial.distance import cdist

from .core import InvalidParameter, MPRSError, PointSet


class FactorizationFailure(MPRSError):
    """Covariance matrix stayed non-positive-definite after maximal jitter."""


JITTER_START = 1e-10
JITTER_STOP = 1e-4


@dataclass(frozen=True)
class WmParams:
    sigma: float = 1.0
    nu: float = 0.5
    kappa: float = 1.0
    mean: float = 0.0

    def __post_init__(self):
        for name in ("sigma", "nu", "kappa", "mean"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("sigma", "nu", "kappa"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidParameter(f"{name} must be positive and finite, got {v}")
        if not np.isfinite(self.mean):
            raise InvalidParameter("mean must be finite")


def wm_covariance(h, p: WmParams):
    """Whittle-Matern covariance at lag(s) ``h``.

    ``C(h) = 2**(1-nu) sigma**2 / Gamma(nu) (kappa h)**nu K_nu(kappa h)``,
    with the analytic limit ``sigma**2`` at ``h = 0``.
    """
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise InvalidParameter("lags must be nonnegative")
    x = p.kappa * h
    out = np.full(x.shape, p.sigma ** 2)
    pos = x > 0
    xp = x[pos]
    # log form with the exponentially scaled Bessel function avoids
    # overflow of x**nu and underflow of K_nu separately
    log_c = (
        (1.0 - p.nu) * np.log(2.0)
        + 2.0 * np.log(p.sigma)
        - special.gammaln(p.nu)
        + p.nu * np.log(xp)
        + np.log(special.kve(p.nu, xp))
        - xp
    )
    out[pos] = np.minimum(np.exp(log_c), p.sigma ** 2)
    return out if out.ndim else float(out)


def covariance_matrix(a: PointSet, b: PointSet, p: WmParams) -> np.ndarray:
    return wm_covariance(cdist(a.coords, b.coords), p)


def _as_rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def cholesky_factor(cov: np.ndarray, variance: float) -> np.ndarray:
    """Lower Cholesky factor with escalating diagonal jitter."""
    jitter = JITTER_START
    n = cov.shape[0]
    while jitter <= JITTER_STOP * (1 + 1e-9):
        try:
            return linalg.cholesky(cov + jitter * variance * np.eye(n), lower=True)
        except linalg.LinAlgError:
            jitter *= 10.0
    raise FactorizationFailure(
        f"covariance of {n} sites not positive definite with jitter {JITTER_STOP:g} sigma^2"
    )


class GaussianFieldSampler:
    """Reusable factorization for many draws on the same sites.

    Coincident sites are merged before factorizing so that they always
    receive identical values.
    """

    def __init__(self, sites: PointSet, p: WmParams):
        self.params = p
        uniq, self._inverse = np.unique(sites.coords, axis=0, return_inverse=True)
        self._inverse = self._inverse.reshape(-1)
        cov = wm_covariance(cdist(uniq, uniq), p)
        self.factor = cholesky_factor(cov, p.sigma ** 2)

    def sample(self, rng=None, size=None) -> np.ndarray:
        """One draw (shape ``(N,)``) or ``size`` draws (shape ``(size, N)``)."""
        g = _as_rng(rng)
        k = 1 if size is None else int(size)
        xi = g.standard_normal((self.factor.shape[0], k))
        z = self.params.mean + (self.factor @ xi).T[:, self._inverse]
        return z[0] if size is None else z


def sample_gaussian_field(sites: PointSet, p: WmParams, rng=None, size=None) -> np.ndarray:
    return GaussianFieldSampler(sites, p).sample(rng, size)


def sample_lognormal_field(sites: PointSet, p: WmParams, rng=None, size=None) -> np.ndarray:
    """``exp`` of a Gaussian field whose log has mean ``p.mean`` and std ``p.sigma``."""
    return np.exp(sample_gaussian_field(sites, p, rng, size))


def lognormal_std(p: WmParams) -> float:
    s2 = p.sigma ** 2
    return float(np.sqrt(np.expm1(s2)) * np.exp(p.mean + s2 / 2))


def scatter_sites(n: int, L: float, d: int = 2, rng=None) -> PointSet:
    """``n`` i.i.d. uniform sites in the cube ``[0, L]**d``."""
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    if not L > 0:
        raise InvalidParameter("L must be positive")
    if d < 1:
        raise InvalidParameter("d must be >= 1")
    return PointSet(_as_rng(rng).uniform(0.0, L, size=(int(n), int(d))))
