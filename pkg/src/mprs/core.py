"""Domain types and the data <-> spin-angle transform."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

TWO_PI = 2.0 * np.pi


class MPRSError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateRange(MPRSError):
    """Training values are constant, so the angle transform is undefined."""


class InsufficientSamples(MPRSError):
    pass


class InsufficientHistory(MPRSError):
    pass


class InvalidParameter(MPRSError, ValueError):
    pass


@dataclass(frozen=True)
class PointSet:
    """Sites in d-dimensional space, optionally carrying one value per site.

    ``coords`` is coerced to a read-only ``(N, d)`` float array; 1-D input is
    read as N sites on a line.
    """

    coords: np.ndarray
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[1] < 1:
            raise InvalidParameter(f"coords must be an (N, d) array, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InvalidParameter("coords contain non-finite entries")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        if self.values is not None:
            v = np.array(self.values, dtype=float).reshape(-1)
            if v.shape[0] != c.shape[0]:
                raise InvalidParameter(
                    f"{v.shape[0]} values for {c.shape[0]} sites"
                )
            if not np.all(np.isfinite(v)):
                raise InvalidParameter("values contain non-finite entries")
            v.setflags(write=False)
            object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self):
        return self.n

    def subset(self, idx) -> "PointSet":
        if not isinstance(idx, slice):
            idx = np.asarray(idx)
        values = None if self.values is None else self.values[idx]
        return PointSet(self.coords[idx], values)

    def without_values(self) -> "PointSet":
        return PointSet(self.coords)

    def with_values(self, values) -> "PointSet":
        return PointSet(self.coords, values)


@dataclass(frozen=True)
class TransformBounds:
    z_min: float
    z_max: float

    def __post_init__(self):
        if not (np.isfinite(self.z_min) and np.isfinite(self.z_max)):
            raise InvalidParameter("transform bounds must be finite")
        if self.z_min > self.z_max:
            raise InvalidParameter(f"z_min={self.z_min} exceeds z_max={self.z_max}")

    @classmethod
    def from_values(cls, values) -> "TransformBounds":
        """Bounds from training values (never pass validation data here)."""
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            raise InsufficientSamples("cannot compute bounds of an empty sample")
        return cls(float(v.min()), float(v.max()))

    @property
    def span(self) -> float:
        return self.z_max - self.z_min

    @property
    def degenerate(self) -> bool:
        return self.z_max == self.z_min


def to_spin_angles(values, bounds: TransformBounds) -> np.ndarray:
    """Map data values linearly onto ``[0, 2*pi]``.

    ``z_min`` goes to exactly 0 and ``z_max`` to exactly ``2*pi``.

    Raises
    ------
    DegenerateRange
        If ``z_max == z_min``.
    """
    if bounds.degenerate:
        raise DegenerateRange(f"constant training data (z = {bounds.z_min})")
    z = np.asarray(values, dtype=float)
    return TWO_PI * ((z - bounds.z_min) / bounds.span)


def from_spin_angles(angles, bounds: TransformBounds) -> np.ndarray:
    """Inverse of :func:`to_spin_angles`; the result is clipped to the bounds."""
    phi = np.asarray(angles, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise InvalidParameter("non-finite spin angles")
    z = bounds.span * (phi / TWO_PI) + bounds.z_min
    return np.clip(z, bounds.z_min, bounds.z_max)


def wrap_angle(phi):
    """Floating modulo into ``[0, 2*pi)``."""
    w = np.mod(phi, TWO_PI)
    # np.mod of a tiny negative number can round up to 2*pi itself
    return np.where(w >= TWO_PI, 0.0, w)


@dataclass
class SpinState:
    """Spin angles at sample sites (fixed) and prediction sites (evolving)."""

    sample_angles: np.ndarray
    pred_angles: np.ndarray
    bounds: TransformBounds

    def __post_init__(self):
        s = np.array(self.sample_angles, dtype=float)
        s.setflags(write=False)
        self.sample_angles = s
        self.pred_angles = np.array(self.pred_angles, dtype=float)

    @property
    def n_pred(self) -> int:
        return self.pred_angles.shape[0]

    def copy(self) -> "SpinState":
        return SpinState(self.sample_angles, self.pred_angles.copy(), self.bounds)

    def pred_values(self) -> np.ndarray:
        return from_spin_angles(self.pred_angles, self.bounds)


@dataclass(frozen=True)
class ModelParams:
    """Model parameters.

    ``bandwidth_k`` is the number of nearest samples whose median distance
    sets each prediction point's coupling decay length.
    """

    n_b: int = 8
    temperature: float = 1e-3
    J0: float = 1.0
    bandwidth_k: int = 4

    def __post_init__(self):
        if int(self.n_b) != self.n_b or self.n_b < 1:
            raise InvalidParameter(f"n_b must be a positive integer, got {self.n_b}")
        if not self.temperature > 0:
            raise InvalidParameter(f"temperature must be positive, got {self.temperature}")
        if not self.J0 > 0:
            raise InvalidParameter(f"J0 must be positive, got {self.J0}")
        if self.bandwidth_k < 1:
            raise InvalidParameter("bandwidth_k must be positive")


INIT_MODES = ("random_uniform", "nearest_neighbor")
EQUILIBRIUM_A_MODES = ("literal_one", "carry_adapted")


@dataclass(frozen=True)
class Hyperparams:
    M: int = 100
    i_max: int = 500
    A_targ: float = 0.3
    k_a: float = 3.0
    n_f: int = 5
    n_fit: int = 20
    init_mode: str = "random_uniform"
    respect_samples: bool = True
    seed: int = 0
    equilibrium_a: str = "literal_one"
    keep_realizations: bool = False

    def __post_init__(self):
        if self.M < 1:
            raise InvalidParameter("M must be >= 1")
        if self.i_max < 1:
            raise InvalidParameter("i_max must be >= 1")
        if not 0.0 < self.A_targ < 1.0:
            raise InvalidParameter("A_targ must lie in (0, 1)")
        if not self.k_a > 0:
            raise InvalidParameter("k_a must be positive")
        if self.n_f < 1:
            raise InvalidParameter("n_f must be >= 1")
        if self.n_fit < 2:
            raise InvalidParameter("n_fit must be >= 2")
        if self.init_mode not in INIT_MODES:
            raise InvalidParameter(f"init_mode must be one of {INIT_MODES}")
        if self.equilibrium_a not in EQUILIBRIUM_A_MODES:
            raise InvalidParameter(f"equilibrium_a must be one of {EQUILIBRIUM_A_MODES}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameter("seed must fit in an unsigned 64-bit integer")
