"""Train/validation splitting, error measures and cross-validation runs."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import rng as _rng
from .baselines import idw_predict, ok_predict
from .core import Hyperparams, InvalidParameter, MPRSError, ModelParams, PointSet
from .engine import predict as mprs_predict
from .fields import GaussianFieldSampler, WmParams, lognormal_std, scatter_sites

METHODS = ("mprs", "ok", "idw")


class InvalidSplit(MPRSError, ValueError):
    pass


@dataclass(frozen=True)
class SplitPlan:
    n: int
    tr: float
    V: int
    seed: int
    train: tuple = field(repr=False)
    validation: tuple = field(repr=False)

    @property
    def n_train(self) -> int:
        return train_size(self.n, self.tr)

    def __iter__(self):
        return iter(zip(self.train, self.validation))


def train_size(n: int, tr: float) -> int:
    # guard against 0.1 * 1000 = 100.00000000000001 style rounding
    return int(np.floor(tr * n + 1e-9))


def make_splits(n: int, tr: float, V: int, seed: int = 0) -> SplitPlan:
    """``V`` random partitions of ``range(n)`` with ``floor(tr * n)`` training indices."""
    if not 0.0 < tr < 1.0:
        raise InvalidSplit(f"training fraction must lie in (0, 1), got {tr}")
    if V < 1:
        raise InvalidSplit("need at least one split")
    k = train_size(n, tr)
    if not 1 <= k <= n - 1:
        raise InvalidSplit(f"floor({tr} * {n}) = {k} leaves an empty training or validation set")
    g = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5EED]))
    train, val = [], []
    for _ in range(V):
        perm = g.permutation(n)
        train.append(np.sort(perm[:k]))
        val.append(np.sort(perm[k:]))
    return SplitPlan(n, tr, V, int(seed), tuple(train), tuple(val))


@dataclass(frozen=True)
class Measures:
    """Errors of one prediction; ``None`` marks an undefined measure."""

    AE: float
    ARE: Optional[float]
    RSE: float
    R: Optional[float]


def compute_measures(truth, pred) -> Measures:
    """Absolute, relative, root-square errors and Pearson correlation.

    The relative error divides ``|truth - pred|`` by the *signed* truth, so
    it is negative for negative data.  It is undefined if any truth value is
    zero; ``R`` is undefined if either series is constant.
    """
    z = np.asarray(truth, dtype=float)
    zh = np.asarray(pred, dtype=float)
    if z.shape != zh.shape or z.ndim != 1 or z.size == 0:
        raise InvalidParameter("truth and prediction must be equal-length non-empty vectors")
    err = z - zh
    ae = float(np.mean(np.abs(err)))
    rse = float(np.sqrt(np.mean(err * err)))
    are = None
    if not np.any(z == 0):
        with np.errstate(over="ignore"):  # near-zero truths legitimately give inf
            are = float(np.mean(np.abs(err) / z))
    r = None
    if z.size >= 2:
        dz, dh = z - z.mean(), zh - zh.mean()
        sz, sh = np.sqrt(np.mean(dz * dz)), np.sqrt(np.mean(dh * dh))
        if sz > 0 and sh > 0:
            r = float(np.mean(dz * dh) / (sz * sh))
    return Measures(ae, are, rse, r)


def _mean_or_none(vals):
    if any(v is None for v in vals):
        return None
    return float(np.mean(vals))


@dataclass
class MeasureReport:
    method: str
    splits: list = field(default_factory=list)    # Measures per split
    t_cpu: list = field(default_factory=list)     # seconds per split

    def add(self, m: Measures, seconds: float):
        self.splits.append(m)
        self.t_cpu.append(float(seconds))

    @property
    def MAE(self):
        return _mean_or_none([m.AE for m in self.splits])

    @property
    def MARE(self):
        return _mean_or_none([m.ARE for m in self.splits])

    @property
    def MRSE(self):
        return _mean_or_none([m.RSE for m in self.splits])

    @property
    def MR(self):
        return _mean_or_none([m.R for m in self.splits])

    @property
    def t_mean(self):
        return float(np.mean(self.t_cpu))

    @property
    def t_std(self):
        return float(np.std(self.t_cpu))

    def summary(self) -> dict:
        return {"method": self.method, "MAE": self.MAE, "MARE": self.MARE, "MRSE": self.MRSE,
                "MR": self.MR, "t_cpu_mean": self.t_mean, "t_cpu_std": self.t_std, "V": len(self.splits)}

    def to_rows(self):
        """Rows for the metrics CSV: one per split, then the aggregate."""
        rows = [[str(i), self.method, m.AE, m.ARE, m.RSE, m.R, t]
                for i, (m, t) in enumerate(zip(self.splits, self.t_cpu))]
        rows.append(["mean", self.method, self.MAE, self.MARE, self.MRSE, self.MR, self.t_mean])
        return rows


METRICS_HEADER = ["split", "method", "AE", "ARE", "RSE", "R", "t_cpu_s"]


@dataclass(frozen=True)
class MethodConfig:
    """Settings for one interpolator; unused fields are ignored."""

    params: ModelParams = ModelParams()
    hyper: Hyperparams = Hyperparams()
    cov: Optional[WmParams] = None
    power: float = 2.0
    threads: int = 1


def run_method(method: str, train: PointSet, queries: PointSet, cfg: MethodConfig,
               seed: int = 0) -> np.ndarray:
    if method == "mprs":
        hyper = replace(cfg.hyper, seed=seed)
        return mprs_predict(train, queries, cfg.params, hyper, threads=cfg.threads).mean
    if method == "idw":
        return idw_predict(train, queries, cfg.power)
    if method == "ok":
        if cfg.cov is None:
            raise InvalidParameter("ordinary kriging needs covariance parameters")
        return ok_predict(train, queries, cfg.cov)[0]
    raise InvalidParameter(f"unknown method {method!r}; expected one of {METHODS}")


def _timed(method, train, queries, cfg, seed):
    t0 = time.perf_counter()
    pred = run_method(method, train, queries, cfg, seed)
    return pred, time.perf_counter() - t0


def crossval(method: str, data: PointSet, plan: SplitPlan, cfg: MethodConfig = MethodConfig(),
             on_split: Optional[Callable] = None) -> MeasureReport:
    """Fit on each training subset, score on the held-out sites.

    Only the prediction call is timed.  MPRS seeds are derived from the plan
    seed and the split index.
    """
    if method not in METHODS:
        raise InvalidParameter(f"unknown method {method!r}; expected one of {METHODS}")
    if data.values is None:
        raise InvalidParameter("cross-validation needs data values")
    if plan.n != data.n:
        raise InvalidSplit(f"plan is for {plan.n} sites, data has {data.n}")
    report = MeasureReport(method)
    for v, (tr_idx, va_idx) in enumerate(plan):
        train = data.subset(tr_idx)
        held = data.subset(va_idx)
        try:
            pred, dt = _timed(method, train, held.without_values(), cfg, _rng.derive_seed(plan.seed, v))
        except MPRSError as exc:
            raise type(exc)(f"split {v}: {exc}") from exc
        report.add(compute_measures(held.values, pred), dt)
        if on_split is not None:
            on_split(v, report)
    return report


def synthetic_study(methods, wm: WmParams, n: int = 1000, L: float = 50.0, d: int = 2,
                    tr: float = 0.10, V: int = 100, seed: int = 0, lognormal: bool = False,
                    cfg: MethodConfig = MethodConfig(), ok_cov: Optional[WmParams] = None) -> dict:
    """Cross-validation over ``V`` independent field realizations.

    One set of ``n`` uniform sites is drawn; realization ``v`` is scored on
    split ``v``.  Every method sees the same realizations and splits.  For
    kriging the generating parameters are used unless ``ok_cov`` is given
    (for lognormal fields the default keeps the log-field correlation shape
    with the lognormal mean and standard deviation).
    """
    g = np.random.default_rng(np.random.SeedSequence([int(seed), 0xF1E1D]))
    sites = scatter_sites(n, L, d, g)
    sampler = GaussianFieldSampler(sites, wm)
    plan = make_splits(n, tr, V, seed)
    if ok_cov is None:
        ok_cov = wm
        if lognormal:
            ok_cov = WmParams(lognormal_std(wm), wm.nu, wm.kappa, float(np.exp(wm.mean + wm.sigma ** 2 / 2)))
    cfg = replace(cfg, cov=ok_cov)
    reports = {m: MeasureReport(m) for m in methods}
    for v, (tr_idx, va_idx) in enumerate(plan):
        z = sampler.sample(g)
        if lognormal:
            z = np.exp(z)
        data = sites.with_values(z)
        train, held = data.subset(tr_idx), data.subset(va_idx)
        for m in methods:
            pred, dt = _timed(m, train, held.without_values(), cfg, _rng.derive_seed(seed, v))
            reports[m].add(compute_measures(held.values, pred), dt)
    return reports
