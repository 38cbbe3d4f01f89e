"""Counter-based random streams.

Every uniform deviate used by the Monte Carlo engine is a pure function of
``(seed, phase, sweep, point)``, evaluated with the Philox4x32-10 block
cipher.  No generator state is carried between calls, so the numbers a point
receives do not depend on how many threads run the sweep or the order in
which points are visited.
"""

import numba as nb
import numpy as np

PHASE_INIT = 0
PHASE_RELAX = 1
PHASE_EQUILIBRIUM = 2

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S5 = np.uint64(5)
_S6 = np.uint64(6)
_TWO26 = 67108864.0
_TWO_M53 = 1.0 / 9007199254740992.0


@nb.njit(cache=True, inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten-round Philox4x32 on one 128-bit counter; all words are uint64 < 2**32."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _MASK
        hi1 = p1 >> _S32
        lo1 = p1 & _MASK
        c0, c1, c2, c3 = (hi1 ^ c1 ^ k0) & _MASK, lo1, (hi0 ^ c3 ^ k1) & _MASK, lo0
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


@nb.njit(cache=True, inline="always")
def _to_unit(hi, lo):
    # 53 random bits -> [0, 1)
    return ((hi >> _S5) * _TWO26 + (lo >> _S6)) * _TWO_M53


@nb.njit(cache=True, inline="always")
def uniform_pair(seed, phase, sweep, point):
    """Two independent uniforms in [0, 1) for one (phase, sweep, point) cell."""
    s = np.uint64(seed)
    pt = np.uint64(point)
    w0, w1, w2, w3 = philox4x32(
        pt & _MASK,
        pt >> _S32,
        np.uint64(sweep) & _MASK,
        np.uint64(phase) & _MASK,
        s & _MASK,
        s >> _S32,
    )
    return _to_unit(w0, w1), _to_unit(w2, w3)


@nb.njit(cache=True)
def _fill_uniforms(seed, phase, sweep, points, out):
    for i in range(points.shape[0]):
        u, r = uniform_pair(seed, phase, sweep, points[i])
        out[i, 0] = u
        out[i, 1] = r


def uniforms(seed, phase, sweep, points):
    """Return a ``(len(points), 2)`` array of uniforms for the given stream cells."""
    points = np.ascontiguousarray(points, dtype=np.int64)
    out = np.empty((points.shape[0], 2))
    _fill_uniforms(np.uint64(seed), np.int64(phase), np.int64(sweep), points, out)
    return out


@nb.njit(cache=True)
def _philox_block(counter, key):
    w = philox4x32(
        np.uint64(counter[0]),
        np.uint64(counter[1]),
        np.uint64(counter[2]),
        np.uint64(counter[3]),
        np.uint64(key[0]),
        np.uint64(key[1]),
    )
    out = np.empty(4, dtype=np.uint64)
    out[0], out[1], out[2], out[3] = w
    return out


def philox_block(counter, key):
    """Raw Philox4x32-10 output words for a 4-word counter and 2-word key."""
    c = np.asarray(counter, dtype=np.uint64)
    k = np.asarray(key, dtype=np.uint64)
    return [int(w) for w in _philox_block(c, k)]


def derive_seed(seed, *path):
    """Derive an independent 64-bit child seed from a parent seed and integer path."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, path)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
