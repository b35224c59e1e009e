"""Counter-based random numbers (Philox4x32-10), vectorised with numpy.

Every uniform is a pure function of ``(seed, stream, counter)``, so a path's
random numbers do not depend on how paths are grouped, ordered or spread
over threads. A path uses ``stream = path index`` and ``counter = event
index``; each counter value yields two independent 53-bit uniforms.
"""
import numpy as np

__all__ = ["philox4x32", "uniforms", "PathStream"]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_32 = np.uint64(32)


def philox4x32(counter, key, rounds=10):
    """Philox4x32 block function.

    Parameters
    ----------
    counter : (4, N) array of uint32-valued integers
    key : (2,) or (2, N) array of uint32-valued integers

    Returns
    -------
    (4, N) uint64 array holding 32-bit outputs.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK for c in counter)
    k0 = np.asarray(key[0], dtype=np.uint64) & _MASK
    k1 = np.asarray(key[1], dtype=np.uint64) & _MASK
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _32) ^ c1 ^ k0,
            p1 & _MASK,
            (p0 >> _32) ^ c3 ^ k1,
            p0 & _MASK,
        )
    return np.stack([c0, c1, c2, c3])


def _split64(x):
    x = np.asarray(x, dtype=np.uint64)
    return x & _MASK, x >> _32


def uniforms(seed, stream, counter):
    """Two uniforms in ``(0, 1)`` per ``(stream, counter)`` pair.

    ``stream`` and ``counter`` are broadcast integer arrays (< 2**64).
    Returns an array of shape ``(2,) + broadcast shape``.
    """
    stream, counter = np.broadcast_arrays(
        np.asarray(stream, dtype=np.uint64), np.asarray(counter, dtype=np.uint64))
    shape = stream.shape
    s_lo, s_hi = _split64(stream.reshape(-1))
    c_lo, c_hi = _split64(counter.reshape(-1))
    k_lo, k_hi = _split64(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    out = philox4x32((c_lo, c_hi, s_lo, s_hi), (k_lo, k_hi))
    # 53 bits from two 32-bit words, offset by half a ulp to exclude 0 and 1
    a = out[0::2] >> np.uint64(6)
    b = out[1::2] >> np.uint64(5)
    u = ((a << np.uint64(27)) | b).astype(np.float64)
    u = (u + 0.5) * 2.0 ** -53
    return u.reshape((2,) + shape)


class PathStream:
    """Sequential view of one path's counter-based stream.

    ``random()`` returns the two uniforms of counter 0, then counter 1, and
    so on, matching what the vectorised engine draws for the same path.
    """

    def __init__(self, seed, stream):
        self.seed = int(seed)
        self.stream = int(stream)
        self.counter = 0
        self._buf = []

    def random(self):
        if not self._buf:
            u = uniforms(self.seed, self.stream, self.counter)
            self._buf = [float(u[1]), float(u[0])]
            self.counter += 1
        return self._buf.pop()
