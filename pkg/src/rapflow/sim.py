"""Exact-law simulation of the orbit / level process and Monte Carlo estimators.

Between jumps the orbit follows ``A_{t+r} = A_t exp(G r) / (A_t exp(G r) 1)``
with ``G`` the diagonal block of ``C[k]`` for the current block. Holding
times are drawn by inverting the survival function ``S(h) = A_t exp(G h) 1``;
the destination block is chosen with probability proportional to its
intensity ``A M 1`` and the orbit lands at ``A M / (A M 1)``.

Randomness is counter based (see :mod:`rapflow.rng`): path ``p`` at its
``n``-th event uses the uniforms for ``(seed, p, n)``. Estimators advance many
paths at once in fixed-size chunks, so results are identical for any number
of worker threads (``RAPFLOW_THREADS``).
"""
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    HoldingTimeOverflowError,
    InvalidIntensityError,
    OrbitDegenerateError,
)
from .linalg import as_row, expm, expm_batch, spectral_abscissa
from .model import MINUS, PLUS, RATES, ZERO, Regime

__all__ = [
    "OrbitState",
    "PathRecord",
    "SimEstimate",
    "PassageEstimate",
    "StationaryEstimate",
    "orbit_state",
    "flow_step",
    "sample_holding_time",
    "sample_jump",
    "simulate_path",
    "estimate_first_return",
    "estimate_hitting",
    "estimate_stationary",
    "default_horizon",
    "n_threads",
]

MAX_HOLDING = 1e6
NEG_TOL = 1e-9
PATH_CHUNK = 4096
CHAIN_CHUNK = 64
_CODES = (PLUS, MINUS, ZERO)
_STATIONARY_STREAM = 1 << 40


def n_threads():
    """Worker threads for estimators, from ``RAPFLOW_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("RAPFLOW_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class OrbitState:
    regime: Regime
    block: int
    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        a = np.array(self.a, dtype=float).reshape(-1)
        a.setflags(write=False)
        object.__setattr__(self, "a", a)


def orbit_state(model, a, regime=PLUS):
    """Wrap a row vector as an :class:`OrbitState`, inferring its block.

    The vector must sum to one and be supported inside a single block.
    """
    if isinstance(a, OrbitState):
        return a
    k = Regime.parse(regime)
    a = as_row(a, "alpha")
    if a.size != model.eta(k):
        raise ValueError(f"orbit has length {a.size}, regime {k} needs {model.eta(k)}")
    if abs(a.sum() - 1.0) > 1e-10:
        raise ValueError("orbit vector must sum to one")
    nz = np.flatnonzero(np.abs(a) > 1e-12)
    blocks = {model.structure.block_of(k, c) for c in nz}
    if len(blocks) != 1:
        raise ValueError(f"orbit vector must live in exactly one block, touches {sorted(blocks)}")
    return OrbitState(k, blocks.pop(), a)


def _block(model, state):
    s = model.block_slice(state.regime, state.block)
    return s, state.a[s], model.C[state.regime][s, s]


def _embed(model, k, i, b):
    a = np.zeros(model.eta(k))
    a[model.block_slice(k, i)] = b
    return a


def flow_step(state, dt, model):
    """Deterministic flow of the orbit over ``dt`` without jumps."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    s, b, G = _block(model, state)
    if dt == 0:
        return state
    e = b @ expm(G, dt)
    norm = e.sum()
    if not norm > 0:
        raise OrbitDegenerateError(f"orbit normalisation {norm:.3e} after flow")
    return OrbitState(state.regime, state.block, _embed(model, state.regime, state.block, e / norm))


# -- holding times ---------------------------------------------------------

def _holding_times(B, G, U):
    """Solve ``B_n exp(G h_n) 1 = U_n`` for each row; returns ``(h, B exp(G h))``.

    Scalar blocks are inverted in closed form. Otherwise the log-survival is
    bracketed by doubling and solved by Newton steps that fall back to
    bisection whenever they leave the bracket.
    """
    n = U.shape[0]
    if G.shape == (1, 1):
        g = float(G[0, 0])
        if g > NEG_TOL:
            raise InvalidIntensityError(f"negative jump intensity {-g:.3e}")
        if g >= -0.0:
            raise HoldingTimeOverflowError("block never jumps (zero intensity)")
        h = np.log(U) / g
        if np.any(h > MAX_HOLDING):
            raise HoldingTimeOverflowError(f"holding time exceeds {MAX_HOLDING:g}")
        return h, B * np.exp(g * h)[:, None]

    g1 = G.sum(axis=1)
    logu = np.log(U)
    lam0 = -(B @ g1)
    if np.any(lam0 < -NEG_TOL):
        raise InvalidIntensityError(f"negative jump intensity {lam0.min():.3e}")
    h = np.where(lam0 > 1e-12, -logu / np.maximum(lam0, 1e-300), 1.0)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    H = np.empty(n)
    E = np.empty_like(B)
    todo = np.arange(n)
    for _ in range(400):
        if todo.size == 0:
            break
        ht = h[todo]
        Et = np.einsum("nj,njk->nk", B[todo], expm_batch(G, ht))
        s = Et.sum(axis=1)
        if np.any(s <= 0):
            raise OrbitDegenerateError("survival function reached zero along the flow")
        lam = -(Et @ g1) / s
        if np.any(lam < -NEG_TOL):
            raise InvalidIntensityError(f"negative jump intensity {lam.min():.3e}")
        f = np.log(s) - logu[todo]
        done = (np.abs(f) <= 1e-13) | ((hi[todo] - lo[todo]) <= 1e-15 * ht)
        H[todo[done]] = ht[done]
        E[todo[done]] = Et[done]
        keep = ~done
        todo, ht, f, lam = todo[keep], ht[keep], f[keep], lam[keep]
        up = f > 0  # survival still above target: root lies to the right
        lo[todo[up]] = ht[up]
        hi[todo[~up]] = ht[~up]
        with np.errstate(divide="ignore", invalid="ignore"):
            hn = ht + f / lam
        bad = ~np.isfinite(hn) | (lam <= 1e-300) | (hn <= lo[todo]) | (hn >= hi[todo])
        unbounded = np.isinf(hi[todo])
        # near a zero of the intensity Newton overshoots; grow at most geometrically
        grow = 2.0 * ht + 1.0
        hn = np.where(unbounded & (bad | (hn > grow)), grow, hn)
        hn = np.where(bad & ~unbounded, 0.5 * (lo[todo] + hi[todo]), hn)
        if np.any(lo[todo] > MAX_HOLDING):
            raise HoldingTimeOverflowError(f"holding time exceeds {MAX_HOLDING:g}")
        h[todo] = hn
    if todo.size:
        raise HoldingTimeOverflowError("holding-time root search did not converge")
    return H, E


def sample_holding_time(state, rng, model):
    """Time to the next jump, by inverting ``S(h) = A exp(G h) 1 = u``."""
    u = rng.random()
    _, b, G = _block(model, state)
    h, _ = _holding_times(b[None, :], G, np.array([u]))
    return float(h[0])


# -- jumps -----------------------------------------------------------------

def _candidate_table(model, k, i):
    cands = model.jump_candidates(k, i)
    if not cands:
        return cands, np.zeros((model.structure.sizes[k][i], 0))
    W = np.stack([M.sum(axis=1) for _, _, M in cands], axis=1)
    return cands, W


def _choose(weights, u):
    if np.any(weights < -NEG_TOL):
        raise InvalidIntensityError(f"negative jump intensity {weights.min():.3e}")
    w = np.maximum(weights, 0.0)
    tot = w.sum(axis=1)
    cum = np.cumsum(w, axis=1)
    pick = np.sum(cum < (u * tot)[:, None], axis=1)
    return np.minimum(pick, w.shape[1] - 1), tot


def sample_jump(state, rng, model):
    """Jump from ``state``: pick a destination block, land deterministically."""
    u = rng.random()
    k, i = state.regime, state.block
    _, b, _ = _block(model, state)
    cands, W = _candidate_table(model, k, i)
    if not cands:
        raise OrbitDegenerateError("no jump destinations from this block")
    w = b[None, :] @ W
    pick, tot = _choose(w, np.array([u]))
    if not tot[0] > 0:
        raise OrbitDegenerateError(f"total jump intensity {tot[0]:.3e}")
    l, j, M = cands[int(pick[0])]
    land = b @ M
    norm = land.sum()
    if not norm > 0:
        raise OrbitDegenerateError("landing point cannot be normalised")
    return OrbitState(l, j, _embed(model, l, j, land / norm))


# -- single paths ------------------------------------------------------------

@dataclass
class PathRecord:
    """Event log of one simulated path.

    ``level`` is the free level ``R`` or, when ``regulated``, the queue ``Q``.
    ``kind`` marks each row as ``start``, ``jump``, ``grid`` or ``end``.
    """

    times: np.ndarray
    levels: np.ndarray
    states: list
    kinds: list
    regulated: bool
    seed: int

    @property
    def events(self):
        return list(zip(self.times.tolist(), self.levels.tolist(), self.states))

    @property
    def n_jumps(self):
        return sum(1 for k in self.kinds if k == "jump")


def simulate_path(model, alpha0, horizon, regulated=False, seed=0, path_index=0,
                  record_dt=None):
    """Simulate one path on ``[0, horizon]``.

    Parameters
    ----------
    alpha0 : OrbitState or row vector (taken in the up regime)
    regulated : bool
        Track the queue ``Q`` reflected at zero instead of the free level.
    record_dt : float, optional
        Also record the state on a regular time grid.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    state = orbit_state(model, alpha0)
    rng = _EventStream(seed, path_index)
    t, lev = 0.0, 0.0
    times, levels, states, kinds = [0.0], [0.0], [state], ["start"]
    next_grid = record_dt if record_dt else np.inf
    while True:
        rng.begin()
        h = sample_holding_time(state, rng, model)
        stop = t + h >= horizon
        seg_end = horizon if stop else t + h
        while next_grid <= seg_end and next_grid <= horizon:
            dt = next_grid - t
            times.append(next_grid)
            levels.append(_advance(lev, state.regime, dt, regulated))
            states.append(flow_step(state, dt, model))
            kinds.append("grid")
            next_grid += record_dt
        if stop:
            lev = _advance(lev, state.regime, horizon - t, regulated)
            state = flow_step(state, horizon - t, model)
            times.append(horizon)
            levels.append(lev)
            states.append(state)
            kinds.append("end")
            break
        lev = _advance(lev, state.regime, h, regulated)
        t += h
        state = sample_jump(flow_step(state, h, model), rng, model)
        times.append(t)
        levels.append(lev)
        states.append(state)
        kinds.append("jump")
    return PathRecord(np.array(times), np.array(levels), states, kinds, regulated, int(seed))


def _advance(level, regime, dt, regulated):
    new = level + RATES[regime] * dt
    return max(new, 0.0) if regulated else new


class _EventStream:
    """Per-event uniforms: holding time then jump, for ``(seed, path, event)``."""

    def __init__(self, seed, stream):
        from .rng import uniforms
        self._uniforms = uniforms
        self.seed, self.stream = int(seed), int(stream)
        self.counter = -1
        self._buf = []

    def begin(self):
        self.counter += 1
        u = self._uniforms(self.seed, self.stream, self.counter)
        self._buf = [float(u[1]), float(u[0])]

    def random(self):
        return self._buf.pop()


# -- estimates ---------------------------------------------------------------

@dataclass(frozen=True)
class SimEstimate:
    """Monte Carlo point estimate with standard error ``sd / sqrt(n)``."""

    mean: object
    stderr: object
    n_samples: int
    seed: int

    def z(self, target):
        """Standardised deviation from ``target`` (0 where both agree exactly)."""
        diff = np.asarray(self.mean, dtype=float) - np.asarray(target, dtype=float)
        se = np.asarray(self.stderr, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, diff / np.where(se > 0, se, 1.0),
                         np.where(diff == 0, 0.0, np.copysign(np.inf, diff)))
        return float(z) if z.ndim == 0 else z


def _summarise(samples, seed):
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    mean = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1) if n > 1 else np.full_like(mean, np.nan)
    se = sd / np.sqrt(n)
    if np.ndim(mean) == 0:
        return SimEstimate(float(mean), float(se), n, int(seed))
    return SimEstimate(mean, se, n, int(seed))


@dataclass(frozen=True)
class PassageEstimate:
    """Estimates of ``P(level reaches -x before horizon)`` and the mean orbit there."""

    prob: SimEstimate
    orbit: SimEstimate
    truncated: int
    aborted: int
    horizon: float
    level: float

    @property
    def truncation_rate(self):
        return self.truncated / max(1, self.prob.n_samples)


@dataclass(frozen=True)
class StationaryEstimate:
    """Time averages of the regulated queue, one batch per independent chain."""

    atom_minus: SimEstimate
    atom_zero: SimEstimate
    bins: SimEstimate
    bins_by_regime: dict
    jump_rate: SimEstimate
    edges: np.ndarray
    aborted: int


def default_horizon(model):
    a = spectral_abscissa(model.C[PLUS]) + spectral_abscissa(model.C[MINUS])
    return 200.0 / abs(a)


class _Chunk:
    """Vectorised simulation of a set of paths sharing an initial state."""

    def __init__(self, model, seed, ids, state0):
        self.model = model
        self.seed = int(seed)
        self.ids = np.asarray(ids, dtype=np.uint64)
        n = self.ids.size
        self.width = max(model.eta(k) for k in model.regimes)
        self.reg = np.full(n, _CODES.index(state0.regime), dtype=np.int8)
        self.blk = np.full(n, state0.block, dtype=np.int32)
        self.A = np.zeros((n, self.width))
        self.A[:, :state0.a.size] = state0.a
        self.t = np.zeros(n)
        self.lev = np.zeros(n)
        self.cnt = np.zeros(n, dtype=np.uint64)
        self.aborted = np.zeros(n, dtype=bool)
        self.groups = [(c, k, i) for c, k in enumerate(_CODES) if k in model.regimes
                       for i in range(model.n_blocks(k))]
        self.tables = {(c, i): _candidate_table(model, k, i) for c, k, i in self.groups}

    def run(self, on_segment):
        """Advance all paths; ``on_segment(idx, k, G, B, h)`` returns a mask of
        paths that stop before jumping. Paths whose orbit degenerates abort."""
        from .rng import uniforms
        alive = np.arange(self.ids.size)
        while alive.size:
            survivors = []
            reg, blk = self.reg[alive], self.blk[alive]
            members = [alive[(reg == c) & (blk == i)] for c, _, i in self.groups]
            for (c, k, i), idx in zip(self.groups, members):
                if idx.size == 0:
                    continue
                s = self.model.block_slice(k, i)
                G = self.model.C[k][s, s]
                B = self.A[idx, s]
                u = uniforms(self.seed, self.ids[idx], self.cnt[idx])
                try:
                    h, E = _holding_times(B, G, u[0])
                except OrbitDegenerateError:
                    h, E, ok = self._holding_one_by_one(B, G, u[0])
                    self.aborted[idx[~ok]] = True
                    idx, B, u, h, E = idx[ok], B[ok], u[:, ok], h[ok], E[ok]
                stop = on_segment(idx, k, G, B, h)
                go = ~stop
                idx, E, h, u2 = idx[go], E[go], h[go], u[1][go]
                if idx.size == 0:
                    continue
                A_new = E / E.sum(axis=1, keepdims=True)
                self.t[idx] += h
                self.cnt[idx] += np.uint64(1)
                ok = self._jump(idx, c, i, A_new, u2)
                survivors.append(idx[ok])
            alive = np.sort(np.concatenate(survivors)) if survivors else np.arange(0)

    def _holding_one_by_one(self, B, G, u):
        h = np.zeros(u.size)
        E = np.zeros_like(B)
        ok = np.ones(u.size, dtype=bool)
        for r in range(u.size):
            try:
                hr, Er = _holding_times(B[r:r + 1], G, u[r:r + 1])
                h[r], E[r] = hr[0], Er[0]
            except OrbitDegenerateError:
                ok[r] = False
        return h, E, ok

    def _jump(self, idx, c, i, A_new, u2):
        cands, W = self.tables[c, i]
        ok = np.ones(idx.size, dtype=bool)
        if not cands:
            self.aborted[idx] = True
            return ~ok
        pick, tot = _choose(A_new @ W, u2)
        ok &= tot > 0
        for n_c, (l, j, M) in enumerate(cands):
            sel = np.flatnonzero((pick == n_c) & ok)
            if sel.size == 0:
                continue
            land = A_new[sel] @ M
            norm = land.sum(axis=1)
            good = norm > 0
            ok[sel[~good]] = False
            sel, land, norm = sel[good], land[good], norm[good]
            rows = idx[sel]
            self.A[rows] = 0.0
            off = self.model.block_slice(l, j)
            self.A[rows, off] = land / norm[:, None]
            self.reg[rows] = _CODES.index(l)
            self.blk[rows] = j
        self.aborted[idx[~ok]] = True
        return ok


def _map_chunks(fn, chunks):
    workers = min(n_threads(), len(chunks))
    if workers <= 1:
        return [fn(ch) for ch in chunks]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, chunks))


def _passage_chunk(model, seed, ids, state0, x, horizon):
    ch = _Chunk(model, seed, ids, state0)
    n = ids.size
    hit = np.zeros(n, dtype=bool)
    trunc = np.zeros(n, dtype=bool)
    orbit = np.zeros((n, model.eta(MINUS)))

    def on_segment(idx, k, G, B, h):
        stop = np.zeros(idx.size, dtype=bool)
        if k == MINUS:
            dist = ch.lev[idx] + x
            reach = (dist <= h) & (ch.t[idx] + dist <= horizon)
            if np.any(reach):
                r = np.flatnonzero(reach)
                Er = np.einsum("nj,njk->nk", B[r], expm_batch(G, dist[r]))
                norm = Er.sum(axis=1)
                good = norm > 0
                rows = idx[r[good]]
                s = ch.model.block_slice(k, int(ch.blk[idx[r[0]]]))
                orbit[rows[:, None], np.arange(s.start, s.stop)[None, :]] = Er[good] / norm[good, None]
                hit[rows] = True
                ch.aborted[idx[r[~good]]] = True
                stop |= reach
        late = ~stop & (ch.t[idx] + h > horizon)
        trunc[idx[late]] = True
        stop |= late
        ch.lev[idx[~stop]] += RATES[k] * h[~stop]
        return stop

    ch.run(on_segment)
    return hit, orbit, trunc, ch.aborted


def estimate_hitting(model, alpha, x, n_paths, horizon=None, seed=0):
    """Monte Carlo estimate of reaching level ``-x`` from an up-regime start.

    Each path starts at level 0 with orbit ``alpha`` and runs until its level
    first reaches ``-x`` while in the down regime, or until ``horizon``
    (default ``200 / |abscissa(C+) + abscissa(C-)|``). Paths still running at
    the horizon count as not reaching; their number is reported.
    """
    x = float(x)
    if x < 0:
        raise ValueError("x must be non-negative")
    horizon = default_horizon(model) if horizon is None else float(horizon)
    state0 = orbit_state(model, alpha, PLUS)
    n_paths = int(n_paths)
    if horizon <= 0:
        warnings.warn("horizon <= 0: every path is truncated, estimate is 0", RuntimeWarning)
        zero = SimEstimate(0.0, 0.0, n_paths, int(seed))
        vec = SimEstimate(np.zeros(model.eta(MINUS)), np.zeros(model.eta(MINUS)), n_paths, int(seed))
        return PassageEstimate(zero, vec, n_paths, 0, horizon, x)
    ids = np.arange(n_paths, dtype=np.uint64)
    chunks = [ids[s:s + PATH_CHUNK] for s in range(0, n_paths, PATH_CHUNK)]
    parts = _map_chunks(lambda c: _passage_chunk(model, seed, c, state0, x, horizon), chunks)
    hit = np.concatenate([p[0] for p in parts])
    orbit = np.concatenate([p[1] for p in parts])
    trunc = np.concatenate([p[2] for p in parts])
    aborted = np.concatenate([p[3] for p in parts])
    n_trunc = int(trunc.sum())
    if n_trunc:
        warnings.warn(f"{n_trunc} of {n_paths} paths truncated at horizon {horizon:g}",
                      RuntimeWarning)
    return PassageEstimate(_summarise(hit.astype(float), seed), _summarise(orbit, seed),
                           n_trunc, int(aborted.sum()), horizon, x)


def estimate_first_return(model, alpha, n_paths, horizon=None, seed=0):
    """Monte Carlo estimate of the first-return probability and orbit.

    The probability estimates ``alpha Psi 1`` and ``orbit`` estimates
    ``alpha Psi`` (with starred matrices when a zero regime exists).
    """
    return estimate_hitting(model, alpha, 0.0, n_paths, horizon, seed)


def _queue_chunk(model, seed, ids, state0, burn_in, t_end, edges):
    ch = _Chunk(model, seed, ids, state0)
    n = ids.size
    nb = edges.size - 1
    lo_e, hi_e = edges[:-1], edges[1:]
    occ = np.zeros((n, 3, nb))
    atom = np.zeros((n, 2))
    jumps = np.zeros(n)

    def on_segment(idx, k, G, B, h):
        t0 = ch.t[idx]
        q = ch.lev[idx]
        seg = np.minimum(h, t_end - t0)
        w0 = np.clip(burn_in - t0, 0.0, None)
        w1 = seg
        obs = w1 > w0
        w0 = np.where(obs, w0, w1)
        code = _CODES.index(k)
        if k == PLUS:
            a, b = q + w0, q + w1
            occ[idx, code] += np.clip(np.minimum(b[:, None], hi_e) - np.maximum(a[:, None], lo_e), 0, None)
            newq = q + h
        elif k == MINUS:
            a, b = np.maximum(q - w1, 0.0), np.maximum(q - w0, 0.0)
            occ[idx, code] += np.clip(np.minimum(b[:, None], hi_e) - np.maximum(a[:, None], lo_e), 0, None)
            atom[idx, 0] += (w1 - w0) - (b - a)
            newq = np.maximum(q - h, 0.0)
        else:
            dur = w1 - w0
            at0 = q <= 0.0
            atom[idx, 1] += np.where(at0, dur, 0.0)
            inside = (q[:, None] >= lo_e) & (q[:, None] < hi_e) & ~at0[:, None]
            occ[idx, code] += inside * dur[:, None]
            newq = q
        stop = t0 + h >= t_end
        jumps[idx] += (~stop) & (t0 + h >= burn_in)
        ch.lev[idx] = newq
        return stop

    ch.run(on_segment)
    return occ, atom, jumps, ch.aborted


def estimate_stationary(model, alpha, total_time, burn_in, grid, seed=0, n_batches=32):
    """Time-average occupation of the regulated queue ``Q``.

    ``n_batches`` independent chains each run for ``burn_in`` plus
    ``total_time / n_batches`` time units from orbit ``alpha`` at ``Q = 0``;
    each chain's post-burn-in time average is one batch mean, and standard
    errors are computed across batches.

    ``grid`` lists increasing bin edges ``g_0 < g_1 < ...`` with ``g_0 >= 0``;
    the bins are ``(g_i, g_{i+1})`` plus a tail bin ``(g_last, inf)``.
    The atoms measure time at ``Q = 0`` in the down and zero regimes.
    """
    if n_batches < 20:
        raise ValueError("need at least 20 batches")
    edges = np.asarray(sorted(float(g) for g in grid), dtype=float)
    if edges.size < 1 or edges[0] < 0:
        raise ValueError("grid must be non-empty with non-negative edges")
    edges = np.append(edges, np.inf)
    state0 = orbit_state(model, alpha, PLUS) if not isinstance(alpha, OrbitState) else alpha
    per = float(total_time) / n_batches
    t_end = float(burn_in) + per
    ids = _STATIONARY_STREAM + np.arange(n_batches, dtype=np.uint64)
    chunks = [ids[s:s + CHAIN_CHUNK] for s in range(0, n_batches, CHAIN_CHUNK)]
    parts = _map_chunks(lambda c: _queue_chunk(model, seed, c, state0, float(burn_in), t_end, edges), chunks)
    occ = np.concatenate([p[0] for p in parts]) / per
    atom = np.concatenate([p[1] for p in parts]) / per
    jumps = np.concatenate([p[2] for p in parts]) / per
    aborted = int(np.concatenate([p[3] for p in parts]).sum())
    if aborted:
        warnings.warn(f"{aborted} chains aborted on a degenerate orbit", RuntimeWarning)
    by_regime = {k: _summarise(occ[:, c], seed) for c, k in enumerate(_CODES) if k in model.regimes}
    return StationaryEstimate(
        atom_minus=_summarise(atom[:, 0], seed),
        atom_zero=_summarise(atom[:, 1], seed),
        bins=_summarise(occ.sum(axis=1), seed),
        bins_by_regime=by_regime,
        jump_rate=_summarise(jumps, seed),
        edges=edges,
        aborted=aborted,
    )
