"""Restricted Metropolis learning of spin angles at prediction sites.

The prediction points interact only with their fixed sample neighbours, so a
sweep is a set of ``P`` independent single-site Metropolis updates.  Each
update draws its two uniforms from the counter-based stream cell
``(seed, phase, sweep, point id)``; sweeps can therefore be split across any
number of threads, or run in any point order, without changing a single bit
of the result.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numba as nb
import numpy as np

from . import rng
from .rng import uniform_pair
from .core import (
    TWO_PI,
    Hyperparams,
    InsufficientHistory,
    InsufficientSamples,
    InvalidParameter,
    ModelParams,
    PointSet,
    SpinState,
    TransformBounds,
    from_spin_angles,
    to_spin_angles,
    wrap_angle,
)
from .neighbors import NeighborGraph, build_graph

log = logging.getLogger(__name__)


@dataclass
class McTrace:
    """Per-sweep record of the Monte Carlo run.

    Relaxation sweeps come first, followed by equilibrium sweeps.  ``slope``
    is NaN for sweeps at which the energy trend was not evaluated.
    """

    energy: np.ndarray = field(default_factory=lambda: np.empty(0))
    acceptance: np.ndarray = field(default_factory=lambda: np.empty(0))
    a_factor: np.ndarray = field(default_factory=lambda: np.empty(0))
    slope: np.ndarray = field(default_factory=lambda: np.empty(0))
    relax_sweeps: int = 0

    @property
    def n_sweeps(self) -> int:
        return int(self.energy.shape[0])

    def extend(self, other: "McTrace") -> "McTrace":
        return McTrace(
            np.concatenate([self.energy, other.energy]),
            np.concatenate([self.acceptance, other.acceptance]),
            np.concatenate([self.a_factor, other.a_factor]),
            np.concatenate([self.slope, other.slope]),
            self.relax_sweeps,
        )

    def to_csv(self) -> str:
        lines = ["sweep,energy,acceptance,a,slope"]
        for i in range(self.n_sweeps):
            k = self.slope[i]
            lines.append(
                f"{i},{float(self.energy[i])!r},{float(self.acceptance[i])!r},"
                f"{float(self.a_factor[i])!r},{'' if math.isnan(k) else repr(float(k))}"
            )
        return "\n".join(lines) + "\n"


@dataclass
class PredictionResult:
    mean: np.ndarray
    std: np.ndarray
    trace: McTrace
    realizations: Optional[np.ndarray] = None
    fixed: Optional[np.ndarray] = None  # queries that copied a coincident sample


# --------------------------------------------------------------------------
# Energies and proposals (reference numpy implementations)
# --------------------------------------------------------------------------

def neighbor_angles(state: SpinState, graph: NeighborGraph) -> np.ndarray:
    return state.sample_angles[graph.neighbor_idx]


def _pair_sum(angles, nbr, coupling):
    # Column-by-column accumulation fixes the summation order per point.
    e = np.zeros(angles.shape[0])
    for j in range(coupling.shape[1]):
        e -= coupling[:, j] * np.cos(0.5 * (angles - nbr[:, j]))
    return e


def local_energy(p: int, angle: float, state: SpinState, graph: NeighborGraph) -> float:
    """Energy of prediction point ``p`` at ``angle`` with its sample bonds only."""
    nbr = state.sample_angles[graph.neighbor_idx[p]]
    return float(_pair_sum(np.array([angle]), nbr[None, :], graph.coupling[p][None, :])[0])


def local_energies(angles, state: SpinState, graph: NeighborGraph) -> np.ndarray:
    """Vector of local energies for all prediction points at ``angles``."""
    return _pair_sum(np.asarray(angles, dtype=float), neighbor_angles(state, graph), graph.coupling)


def total_energy(state: SpinState, graph: NeighborGraph) -> float:
    """Prediction-to-sample part of the Hamiltonian.

    The sample-sample bonds only add a constant and are left out.
    """
    if state.n_pred == 0:
        return 0.0
    return float(np.sum(local_energies(state.pred_angles, state, graph)))


def propose(angle, a, u):
    """Restricted proposal ``angle + 2*pi*(u - 0.5)/a`` wrapped into ``[0, 2*pi)``."""
    if np.any(np.asarray(a) < 1):
        raise InvalidParameter("perturbation factor a must be >= 1")
    return wrap_angle(np.asarray(angle) + TWO_PI * (np.asarray(u) - 0.5) / a)


def acceptance_probability(delta_h, temperature):
    """``min(1, exp(-dH/T))`` without overflow for large downhill moves."""
    x = -np.asarray(delta_h, dtype=float) / temperature
    return np.exp(np.minimum(x, 0.0))


# --------------------------------------------------------------------------
# Compiled sweep
# --------------------------------------------------------------------------

@nb.njit(cache=True, nogil=True)
def _sweep_kernel(angles, nbr, coupling, ids, start, stop, seed, phase, sweep,
                  a, temperature, energy_out, accepted_out):
    n_b = coupling.shape[1]
    step = TWO_PI / a
    for p in range(start, stop):
        u, r = uniform_pair(seed, phase, sweep, ids[p])
        cur = angles[p]
        cand = (cur + step * (u - 0.5)) % TWO_PI
        if cand >= TWO_PI:
            cand = 0.0
        e_cur = 0.0
        e_new = 0.0
        for j in range(n_b):
            e_cur -= coupling[p, j] * math.cos(0.5 * (cur - nbr[p, j]))
        for j in range(n_b):
            e_new -= coupling[p, j] * math.cos(0.5 * (cand - nbr[p, j]))
        dh = e_new - e_cur
        ap = 1.0 if dh <= 0.0 else math.exp(-dh / temperature)
        if ap > r:
            angles[p] = cand
            energy_out[p] = e_new
            accepted_out[p] = 1
        else:
            energy_out[p] = e_cur
            accepted_out[p] = 0


class Sweeper:
    """Runs sweeps over a fixed geometry, optionally on several threads.

    ``ids`` are the stream identities of the prediction points (by default
    their positions); two runs that give a point the same id, seed, phase and
    sweep index hand it the same random numbers.
    """

    def __init__(self, state: SpinState, graph: NeighborGraph, temperature: float,
                 seed: int, ids=None, threads: int = 1):
        if not temperature > 0:
            raise InvalidParameter("temperature must be positive")
        self.state = state
        self.nbr = np.ascontiguousarray(neighbor_angles(state, graph))
        self.coupling = np.ascontiguousarray(graph.coupling, dtype=float)
        p = state.n_pred
        self.ids = np.arange(p, dtype=np.int64) if ids is None else np.ascontiguousarray(ids, dtype=np.int64)
        if self.ids.shape[0] != p:
            raise InvalidParameter("one stream id per prediction point required")
        self.temperature = float(temperature)
        self.seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self.energy = np.zeros(p)
        self.accepted = np.zeros(p, dtype=np.int8)
        self.threads = max(1, int(threads))
        bounds = np.linspace(0, p, min(self.threads, max(p, 1)) + 1).astype(int)
        self._chunks = [(int(s), int(e)) for s, e in zip(bounds[:-1], bounds[1:]) if e > s]
        self._pool = ThreadPoolExecutor(self.threads) if len(self._chunks) > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def sweep(self, a: float, phase: int, index: int) -> float:
        """One Metropolis sweep in place; returns the acceptance ratio."""
        if a < 1:
            raise InvalidParameter("perturbation factor a must be >= 1")
        p = self.state.n_pred
        if p == 0:
            return 1.0
        args = (self.state.pred_angles, self.nbr, self.coupling, self.ids)
        tail = (self.seed, np.int64(phase), np.int64(index), float(a), self.temperature,
                self.energy, self.accepted)
        if self._pool is None:
            _sweep_kernel(*args, 0, p, *tail)
        else:
            futs = [self._pool.submit(_sweep_kernel, *args, s, e, *tail) for s, e in self._chunks]
            for f in futs:
                f.result()
        return float(np.count_nonzero(self.accepted)) / p

    def current_energy(self) -> float:
        """Total energy after the last sweep (sum of per-point energies)."""
        return float(np.sum(self.energy))


def metropolis_sweep(state: SpinState, graph: NeighborGraph, a: float, T: float, seed: int,
                     phase: int = rng.PHASE_RELAX, index: int = 0, ids=None,
                     threads: int = 1) -> float:
    """Single restricted Metropolis sweep, mutating ``state.pred_angles``."""
    with Sweeper(state, graph, T, seed, ids=ids, threads=threads) as sw:
        return sw.sweep(a, phase, index)


# --------------------------------------------------------------------------
# Equilibrium detection
# --------------------------------------------------------------------------

def sg_slope(energies) -> float:
    """Least-squares straight-line slope of an energy window, per sweep.

    A first-degree Savitzky-Golay filter fits exactly this line, so the
    derivative it returns anywhere in the window is this slope.
    """
    e = np.asarray(energies, dtype=float)
    n = e.shape[0]
    if n < 2:
        raise InsufficientHistory(f"slope needs at least 2 energies, got {n}")
    t = np.arange(n) - 0.5 * (n - 1)
    return float(np.dot(t, e - e.mean()) / np.dot(t, t))


def relax(sweeper: Sweeper, hyper: Hyperparams) -> tuple[McTrace, float]:
    """Non-equilibrium stage: sweep until the fitted energy slope stops being negative.

    Returns the trace and the final perturbation factor.
    """
    energy, acc, a_hist, slopes = [], [], [], []
    k, a, i = -1.0, 1.0, 0
    while k < 0 and i < hyper.i_max:
        ratio = sweeper.sweep(a, rng.PHASE_RELAX, i)
        if ratio < hyper.A_targ:
            a = 1.0 + (i + 1) / hyper.k_a
        energy.append(sweeper.current_energy())
        acc.append(ratio)
        a_hist.append(a)
        if i >= hyper.n_fit and i % hyper.n_f == 0:
            k = sg_slope(energy[-hyper.n_fit:])
            slopes.append(k)
        else:
            slopes.append(np.nan)
        i += 1
    log.debug("relaxation stopped after %d sweeps, slope %.3g, a %.3g", i, k, a)
    trace = McTrace(np.array(energy), np.array(acc), np.array(a_hist), np.array(slopes), i)
    return trace, a


def collect_equilibrium(sweeper: Sweeper, hyper: Hyperparams, a_relaxed: float = 1.0,
                        keep: bool = False):
    """Equilibrium stage: ``M`` further sweeps, back-transforming each state.

    Returns ``(mean, std, realizations or None, trace)`` in data units.  The
    standard deviation uses the ``M - 1`` denominator (zero when ``M == 1``).
    """
    state = sweeper.state
    bounds = state.bounds
    p = state.n_pred
    a = 1.0 if hyper.equilibrium_a == "literal_one" else a_relaxed
    real = np.empty((hyper.M, p)) if keep else None
    mean = np.zeros(p)
    m2 = np.zeros(p)
    energy, acc = np.empty(hyper.M), np.empty(hyper.M)
    for j in range(hyper.M):
        acc[j] = sweeper.sweep(a, rng.PHASE_EQUILIBRIUM, j)
        energy[j] = sweeper.current_energy()
        z = from_spin_angles(state.pred_angles, bounds)
        if keep:
            real[j] = z
        d = z - mean
        mean += d / (j + 1)
        m2 += d * (z - mean)
    mean = np.clip(mean, bounds.z_min, bounds.z_max)
    std = np.sqrt(m2 / (hyper.M - 1)) if hyper.M > 1 else np.zeros(p)
    trace = McTrace(energy, acc, np.full(hyper.M, a), np.full(hyper.M, np.nan), 0)
    return mean, std, real, trace


def init_state(sample_angles, graph: NeighborGraph, hyper: Hyperparams, bounds: TransformBounds,
               ids=None) -> SpinState:
    """Initial prediction angles: uniform on ``[0, 2*pi)`` or nearest-sample copy."""
    p = graph.n_pred
    if hyper.init_mode == "nearest_neighbor":
        pred = np.asarray(sample_angles)[graph.neighbor_idx[:, 0]].copy()
    else:
        ids = np.arange(p) if ids is None else ids
        pred = TWO_PI * rng.uniforms(hyper.seed, rng.PHASE_INIT, 0, ids)[:, 0]
    return SpinState(sample_angles, pred, bounds)


def predict(samples: PointSet, queries: PointSet, params: ModelParams = ModelParams(),
            hyper: Hyperparams = Hyperparams(), threads: int = 1) -> PredictionResult:
    """Learn the spin field at ``queries`` conditioned on ``samples`` and summarize it.

    Results are a deterministic function of the inputs and ``hyper.seed``;
    ``threads`` only changes the speed.
    """
    if samples.values is None:
        raise InvalidParameter("samples carry no values")
    need = max(params.n_b, params.bandwidth_k)
    if samples.n < need:
        raise InsufficientSamples(f"need at least {need} samples, have {samples.n}")
    p_all = queries.n
    bounds = TransformBounds.from_values(samples.values)
    keep = hyper.keep_realizations

    if bounds.degenerate:
        c = bounds.z_min
        real = np.full((hyper.M, p_all), c) if keep else None
        return PredictionResult(np.full(p_all, c), np.zeros(p_all), McTrace(), real,
                                np.zeros(p_all, dtype=bool))

    sample_angles = to_spin_angles(samples.values, bounds)
    graph = build_graph(samples, queries, params)

    fixed = np.zeros(p_all, dtype=bool)
    if hyper.respect_samples:
        fixed = graph.neighbor_dist[:, 0] == 0.0
    active = np.flatnonzero(~fixed)
    sub = graph.subset(active) if fixed.any() else graph

    state = init_state(sample_angles, sub, hyper, bounds, ids=active)
    mean = np.empty(p_all)
    std = np.zeros(p_all)
    real = np.empty((hyper.M, p_all)) if keep else None
    with Sweeper(state, sub, params.temperature, hyper.seed, ids=active, threads=threads) as sw:
        trace, a = relax(sw, hyper)
        m, s, r, eq_trace = collect_equilibrium(sw, hyper, a, keep=keep)
    mean[active], std[active] = m, s
    if keep:
        real[:, active] = r
    if fixed.any():
        copied = samples.values[graph.neighbor_idx[fixed, 0]]
        mean[fixed] = copied
        if keep:
            real[:, fixed] = copied
    return PredictionResult(mean, std, trace.extend(eq_trace), real, fixed)
