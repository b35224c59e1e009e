"""RAP-modulated fluid models: representation, checks, constructors, censoring.

A model is described by one square matrix ``C[k]`` per regime ``k`` and one
rectangular matrix ``D[k, l]`` per ordered pair of distinct regimes. The
coordinates of each regime are partitioned into contiguous blocks; the
block-diagonal part of ``C[k]`` drives the deterministic flow of the orbit and
the off-diagonal blocks of ``C[k]`` and all of ``D[k, l]`` drive its jumps.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, ModelError, SingularZeroBlockError
from .linalg import as_matrix, as_row, expm_batch, inf_norm, spectral_abscissa

__all__ = [
    "Regime",
    "PLUS",
    "MINUS",
    "ZERO",
    "RATES",
    "BlockStructure",
    "RapFluidModel",
    "ValidationReport",
    "CensoredModel",
    "check_rates",
    "validate",
    "from_markov_jump",
    "from_me_renewal",
    "from_markov_renewal_me",
    "censor_zero",
]

ROW_SUM_TOL = 1e-10
INTENSITY_TOL = 1e-9


class Regime(str, Enum):
    PLUS = "+"
    MINUS = "-"
    ZERO = "0"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "+": cls.PLUS, "plus": cls.PLUS, "p": cls.PLUS, "up": cls.PLUS,
            "-": cls.MINUS, "minus": cls.MINUS, "m": cls.MINUS, "down": cls.MINUS,
            "0": cls.ZERO, "zero": cls.ZERO, "z": cls.ZERO,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown regime label {value!r}") from None

    @property
    def short(self):
        return {"+": "p", "-": "m", "0": "0"}[self.value]

    def __str__(self):
        return self.value


PLUS, MINUS, ZERO = Regime.PLUS, Regime.MINUS, Regime.ZERO
ORDER = (PLUS, MINUS, ZERO)

#: Level slope in each regime. Only unit rates are supported.
RATES = {PLUS: 1.0, MINUS: -1.0, ZERO: 0.0}


def check_rates(rates):
    """Reject any rate specification other than +1 / -1 / 0.

    General positive and negative rates reduce to unit rates by a random
    time change: divide every row of ``C[k]`` and ``D[k, l]`` belonging to a
    block with rate ``r`` by ``|r|``. The level process of the transformed
    model visits the same levels in the same order.
    """
    for k, r in dict(rates).items():
        k = Regime.parse(k)
        if float(r) != RATES[k]:
            raise ModelError(
                f"rate {r} for regime {k} is not supported: only unit rates "
                "(+1, -1, 0) are implemented. Rescale the rows of C and D of "
                "each block by 1/|rate| (a time change) to obtain an "
                "equivalent unit-rate model.",
                code="general-rates",
            )


@dataclass(frozen=True)
class BlockStructure:
    """Block sizes ``m^k_1, ..., m^k_{n^k}`` for each regime."""

    sizes: Mapping[Regime, Tuple[int, ...]]

    def __post_init__(self):
        clean = {}
        for k in ORDER:
            s = tuple(int(x) for x in self.sizes.get(k, ()))
            if any(x < 1 for x in s):
                raise DimensionError(f"block sizes of regime {k} must be >= 1: {s}")
            clean[k] = s
        for k in self.sizes:
            Regime.parse(k)
        if not clean[PLUS] or not clean[MINUS]:
            raise DimensionError("regimes + and - need at least one block each")
        object.__setattr__(self, "sizes", clean)

    @classmethod
    def single(cls, eta_plus, eta_minus, eta_zero=0):
        """One block per regime."""
        return cls({PLUS: (eta_plus,), MINUS: (eta_minus,),
                    ZERO: (eta_zero,) if eta_zero else ()})

    @classmethod
    def from_spec(cls, spec):
        """Build from a mapping regime-label -> list of sizes."""
        return cls({Regime.parse(k): tuple(v) for k, v in dict(spec).items()})

    def n(self, k):
        return len(self.sizes[k])

    def eta(self, k):
        return int(sum(self.sizes[k]))

    def offsets(self, k):
        return np.concatenate([[0], np.cumsum(self.sizes[k])]).astype(int)

    def block_slice(self, k, i):
        off = self.offsets(k)
        return slice(int(off[i]), int(off[i + 1]))

    def block_of(self, k, coord):
        off = self.offsets(k)
        return int(np.searchsorted(off, coord, side="right") - 1)

    @property
    def regimes(self):
        return tuple(k for k in ORDER if self.sizes[k])

    def to_dict(self):
        return {k.value: list(self.sizes[k]) for k in ORDER}


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RapFluidModel:
    """Matrix parameters of a RAP-modulated fluid process with unit rates.

    Parameters
    ----------
    structure : BlockStructure
    C : dict Regime -> (eta^k, eta^k) array
    D : dict (Regime, Regime) -> (eta^k, eta^l) array
        Missing pairs among present regimes are filled with zeros.
    seed_points : dict Regime -> tuple of row vectors, optional
        Natural starting points (e.g. initial vectors of matrix-exponential
        blocks) used by the heuristic intensity check.
    """

    structure: BlockStructure
    C: Mapping[Regime, np.ndarray]
    D: Mapping[Tuple[Regime, Regime], np.ndarray]
    seed_points: Optional[Mapping[Regime, Tuple[np.ndarray, ...]]] = None
    name: str = ""
    _jump_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        st = self.structure
        regs = st.regimes
        C, D = {}, {}
        for k in regs:
            if k not in self.C:
                raise DimensionError(f"missing C matrix for regime {k}")
            c = as_matrix(self.C[k], f"C{k}")
            if c.shape != (st.eta(k), st.eta(k)):
                raise DimensionError(
                    f"C{k} has shape {c.shape}, structure requires "
                    f"{(st.eta(k), st.eta(k))}"
                )
            C[k] = _frozen(c)
        for k in self.C:
            if Regime.parse(k) not in regs:
                raise DimensionError(f"C given for absent regime {k}")
        for (k, l), d in self.D.items():
            if k not in regs or l not in regs or k == l:
                raise DimensionError(f"D{k}{l} does not fit the block structure")
        for k in regs:
            for l in regs:
                if k == l:
                    continue
                if (k, l) in self.D:
                    d = as_matrix(self.D[k, l], f"D{k}{l}")
                    if d.shape != (st.eta(k), st.eta(l)):
                        raise DimensionError(
                            f"D{k}{l} has shape {d.shape}, structure requires "
                            f"{(st.eta(k), st.eta(l))}"
                        )
                else:
                    d = np.zeros((st.eta(k), st.eta(l)))
                D[k, l] = _frozen(d)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        if self.seed_points is not None:
            seeds = {}
            for k, pts in self.seed_points.items():
                k = Regime.parse(k)
                seeds[k] = tuple(_frozen(as_row(p)) for p in pts)
                for p in seeds[k]:
                    if p.size != st.eta(k):
                        raise DimensionError(f"seed point of length {p.size} in regime {k}")
            object.__setattr__(self, "seed_points", seeds)

    @classmethod
    def from_matrices(cls, C_plus, C_minus, D_pm, D_mp, C_zero=None, D_p0=None,
                      D_m0=None, D_0p=None, D_0m=None, structure=None, name=""):
        """Convenience constructor from named matrices.

        Without ``structure`` every regime is a single block.
        """
        C = {PLUS: as_matrix(C_plus, "C+"), MINUS: as_matrix(C_minus, "C-")}
        D = {(PLUS, MINUS): D_pm, (MINUS, PLUS): D_mp}
        if C_zero is not None:
            C[ZERO] = as_matrix(C_zero, "C0")
            for key, val in (((PLUS, ZERO), D_p0), ((MINUS, ZERO), D_m0),
                             ((ZERO, PLUS), D_0p), ((ZERO, MINUS), D_0m)):
                if val is not None:
                    D[key] = val
        if structure is None:
            structure = BlockStructure.single(
                C[PLUS].shape[0], C[MINUS].shape[0],
                C[ZERO].shape[0] if ZERO in C else 0)
        return cls(structure, C, D, name=name)

    # -- structure -------------------------------------------------------
    @property
    def regimes(self):
        return self.structure.regimes

    @property
    def has_zero(self):
        return bool(self.structure.sizes[ZERO])

    def eta(self, k):
        return self.structure.eta(k)

    def n_blocks(self, k):
        return self.structure.n(k)

    def block_slice(self, k, i):
        return self.structure.block_slice(k, i)

    # -- derived views ---------------------------------------------------
    def gamma(self, k):
        """Block-diagonal part of ``C[k]`` (the flow generator)."""
        G = np.zeros_like(self.C[k])
        for i in range(self.n_blocks(k)):
            s = self.block_slice(k, i)
            G[s, s] = self.C[k][s, s]
        return G

    def c_hat(self, k, i, j):
        """``C[k]`` with only block ``(i, j)`` retained."""
        out = np.zeros_like(self.C[k])
        si, sj = self.block_slice(k, i), self.block_slice(k, j)
        out[si, sj] = self.C[k][si, sj]
        return out

    def d_hat(self, k, l, i, j):
        """``D[k, l]`` with only block ``(i, j)`` retained."""
        out = np.zeros_like(self.D[k, l])
        si, sj = self.block_slice(k, i), self.block_slice(l, j)
        out[si, sj] = self.D[k, l][si, sj]
        return out

    def jump_candidates(self, k, i):
        """Possible jump destinations from block ``i`` of regime ``k``.

        Returns a list of ``(l, j, M)`` where ``M`` is the ``(m^k_i, m^l_j)``
        sub-block whose row sums give the jump intensity. Identically zero
        blocks are omitted.
        """
        key = (k, i)
        if key not in self._jump_cache:
            si = self.block_slice(k, i)
            out = []
            for j in range(self.n_blocks(k)):
                if j != i:
                    M = self.C[k][si, self.block_slice(k, j)]
                    if np.any(M != 0):
                        out.append((k, j, _frozen(M)))
            for l in self.regimes:
                if l == k:
                    continue
                for j in range(self.n_blocks(l)):
                    M = self.D[k, l][si, self.block_slice(l, j)]
                    if np.any(M != 0):
                        out.append((l, j, _frozen(M)))
            self._jump_cache[key] = out
        return self._jump_cache[key]

    def row_sum_residual(self, k):
        r = self.C[k].sum(axis=1)
        for l in self.regimes:
            if l != k:
                r = r + self.D[k, l].sum(axis=1)
        return float(np.max(np.abs(r)))

    def to_dict(self):
        """Plain-Python representation (stable ordering) used for hashing."""
        out = {"structure": self.structure.to_dict()}
        for k in self.regimes:
            out[f"C_{k.short}"] = self.C[k].tolist()
        for (k, l), d in sorted(self.D.items(), key=lambda kv: (ORDER.index(kv[0][0]), ORDER.index(kv[0][1]))):
            out[f"D_{k.short}{l.short}"] = d.tolist()
        return out


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    value: float = float("nan")


@dataclass
class ValidationReport:
    checks: list
    assumptions: list

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self):
        return [c.name for c in self.checks if not c.passed]


ASSUMPTIONS = [
    "boundedness of the orbit state space is assumed, not verified",
    "minimality of each block's affine hull is assumed, not verified",
    "nonnegative intensities are checked only along flows from seed points "
    "(block unit vectors or constructor-supplied starting vectors)",
]


def _seed_points(model, k):
    if model.seed_points is not None and k in model.seed_points:
        return list(model.seed_points[k])
    pts = []
    for c in range(model.eta(k)):
        e = np.zeros(model.eta(k))
        e[c] = 1.0
        pts.append(e)
    return pts


def _intensity_check(model, seed_points=None, n_steps=200, horizon_factor=20.0):
    worst = np.inf
    where = ""
    for k in model.regimes:
        seeds = seed_points.get(k) if seed_points else None
        seeds = [as_row(s) for s in seeds] if seeds else _seed_points(model, k)
        for a0 in seeds:
            nz = np.flatnonzero(np.abs(a0) > 0)
            if nz.size == 0:
                continue
            i = model.structure.block_of(k, nz[0])
            s = model.block_slice(k, i)
            b = a0[s]
            G = model.C[k][s, s]
            absc = spectral_abscissa(G)
            T = horizon_factor / abs(absc) if absc < 0 else horizon_factor
            ts = np.linspace(0.0, T, n_steps + 1)
            flows = np.einsum("j,tjk->tk", b, expm_batch(G, ts))
            norm = flows.sum(axis=1)
            if np.any(norm <= 0):
                return False, -np.inf, f"orbit normalisation vanishes from seed in regime {k}"
            A = flows / norm[:, None]
            vals = [-(A @ G.sum(axis=1))]
            vals += [A @ M.sum(axis=1) for _, _, M in model.jump_candidates(k, i)]
            m = float(np.min(vals))
            if m < worst:
                worst = m
                where = f"regime {k}, block {i}"
    ok = worst >= -INTENSITY_TOL
    return ok, worst, ("min intensity %.3e at %s" % (worst, where)) if where else "no seeds"


def validate(model, seed_points=None):
    """Run the checkable model conditions.

    Checks: ``dimensions`` (always passes, since inconsistent dimensions
    raise at construction), ``row_sums`` (``C^k 1 + sum_l D^{kl} 1 = 0``),
    ``stability`` (every ``C^k`` has negative spectral abscissa) and
    ``intensities`` (heuristic flow-based non-negativity check).

    Failures are reported, not raised.
    """
    checks = [Check("dimensions", True, "consistent with block structure", 0.0)]
    res = max(model.row_sum_residual(k) for k in model.regimes)
    checks.append(Check("row_sums", res <= ROW_SUM_TOL, f"max |row sum| = {res:.3e}", res))
    absc = {k: spectral_abscissa(model.C[k]) for k in model.regimes}
    worst = max(absc.values())
    checks.append(Check(
        "stability", worst < 0,
        ", ".join(f"abscissa(C{k}) = {v:.6g}" for k, v in absc.items()), worst))
    ok, val, detail = _intensity_check(model, seed_points)
    checks.append(Check("intensities", ok, detail, val))
    return ValidationReport(checks, list(ASSUMPTIONS))


# -- constructors ---------------------------------------------------------

def from_markov_jump(Qgen, regime_of_state, blocks=None, name="mjp"):
    """Model driven by a Markov jump process with generator ``Qgen``.

    ``regime_of_state[s]`` gives the regime of state ``s``. States of each
    regime keep their relative order; ``blocks`` (a BlockStructure or a
    mapping of sizes) optionally partitions them into blocks.
    """
    Q = as_matrix(Qgen, "Qgen", square=True)
    n = Q.shape[0]
    labels = [Regime.parse(r) for r in regime_of_state]
    if len(labels) != n:
        raise DimensionError(f"{len(labels)} regime labels for {n} states")
    scale = max(1.0, inf_norm(Q))
    off = Q - np.diag(np.diag(Q))
    if np.any(np.diag(Q) > 0) or np.any(off < 0):
        raise ModelError("Qgen is not a generator: sign pattern violated", code="not-generator")
    if np.max(np.abs(Q.sum(axis=1))) > 1e-12 * scale:
        raise ModelError("Qgen is not a generator: rows do not sum to zero", code="not-generator")
    idx = {k: [s for s in range(n) if labels[s] == k] for k in ORDER}
    if blocks is None:
        blocks = BlockStructure({k: ((len(v),) if v else ()) for k, v in idx.items()})
    elif not isinstance(blocks, BlockStructure):
        blocks = BlockStructure.from_spec(blocks)
    for k in ORDER:
        if blocks.eta(k) != len(idx[k]):
            raise DimensionError(f"blocks of regime {k} cover {blocks.eta(k)} states, "
                                 f"{len(idx[k])} labelled")
    C = {k: Q[np.ix_(idx[k], idx[k])] for k in blocks.regimes}
    D = {(k, l): Q[np.ix_(idx[k], idx[l])]
         for k in blocks.regimes for l in blocks.regimes if k != l}
    return RapFluidModel(blocks, C, D, name=name)


def _check_me(alpha, S, label):
    alpha = as_row(alpha, f"alpha{label}")
    S = as_matrix(S, f"S{label}", square=True)
    if alpha.size != S.shape[0]:
        raise DimensionError(f"alpha{label} and S{label} sizes differ")
    if abs(alpha.sum() - 1.0) > 1e-12:
        raise ModelError(f"alpha{label} must sum to one (sums to {alpha.sum():.15g})",
                         code="bad-me-parameters")
    if spectral_abscissa(S) >= 0:
        raise ModelError(f"S{label} is not stable", code="bad-me-parameters")
    return alpha, S


def from_me_renewal(alphaP, SP, alphaM, SM, name="me-renewal"):
    """Alternating renewal model with matrix-exponential sojourns.

    ``C^k = S^k`` and ``D^{kl} = (-S^k 1) alpha^l``.
    """
    aP, SP = _check_me(alphaP, SP, "+")
    aM, SM = _check_me(alphaM, SM, "-")
    C = {PLUS: SP, MINUS: SM}
    D = {(PLUS, MINUS): np.outer(-SP.sum(axis=1), aM),
         (MINUS, PLUS): np.outer(-SM.sum(axis=1), aP)}
    st = BlockStructure.single(SP.shape[0], SM.shape[0])
    return RapFluidModel(st, C, D, seed_points={PLUS: (aP,), MINUS: (aM,)}, name=name)


def from_markov_renewal_me(P, me_params, name="markov-renewal-me"):
    """Markov renewal model with matrix-exponential inter-jump times.

    Parameters
    ----------
    P : mapping (k, l) -> (n^k, n^l) array
        Blocks of a stochastic matrix over all (regime, block) pairs;
        missing blocks are zero.
    me_params : mapping k -> list of (alpha, S)
        One matrix-exponential pair per block of regime ``k``.

    Off-diagonal blocks are ``C^k_{ij} = p^{kk}_{ij} (-S^k_i 1) alpha^k_j`` and
    ``D^{kl}_{ih} = p^{kl}_{ih} (-S^k_i 1) alpha^l_h``. The diagonal block is
    ``S^k_i``, plus ``p^{kk}_{ii} (-S^k_i 1) alpha^k_i`` when a block may renew
    into itself.
    """
    params = {Regime.parse(k): [_check_me(a, S, f"{Regime.parse(k)}{i}")
                                for i, (a, S) in enumerate(v)]
              for k, v in dict(me_params).items()}
    regs = [k for k in ORDER if params.get(k)]
    sizes = {k: tuple(S.shape[0] for _, S in params[k]) for k in regs}
    st = BlockStructure(sizes)
    nb = {k: len(params[k]) for k in regs}
    Pm = {}
    for (k, l), blk in dict(P).items():
        k, l = Regime.parse(k), Regime.parse(l)
        if k not in regs or l not in regs:
            raise DimensionError(f"P block ({k},{l}) refers to an absent regime")
        blk = as_matrix(blk, f"P{k}{l}")
        if blk.shape != (nb[k], nb[l]):
            raise DimensionError(f"P{k}{l} has shape {blk.shape}, expected {(nb[k], nb[l])}")
        Pm[k, l] = blk
    for k in regs:
        for l in regs:
            Pm.setdefault((k, l), np.zeros((nb[k], nb[l])))
    for k in regs:
        rows = sum(Pm[k, l].sum(axis=1) for l in regs)
        if any(np.any(Pm[k, l] < 0) for l in regs) or np.max(np.abs(rows - 1)) > 1e-12:
            raise ModelError(f"P rows of regime {k} are not stochastic: {rows}",
                             code="non-stochastic-P")

    C = {k: np.zeros((st.eta(k), st.eta(k))) for k in regs}
    D = {(k, l): np.zeros((st.eta(k), st.eta(l))) for k in regs for l in regs if k != l}
    for k in regs:
        for i, (ai, Si) in enumerate(params[k]):
            exit_i = -Si.sum(axis=1)
            si = st.block_slice(k, i)
            for l in regs:
                for h, (ah, _) in enumerate(params[l]):
                    blk = Pm[k, l][i, h] * np.outer(exit_i, ah)
                    sh = st.block_slice(l, h)
                    if l == k:
                        C[k][si, sh] += blk
                    else:
                        D[k, l][si, sh] = blk
            C[k][si, si] += Si
    seeds = {}
    for k in regs:
        pts = []
        for i, (ai, _) in enumerate(params[k]):
            p = np.zeros(st.eta(k))
            p[st.block_slice(k, i)] = ai
            pts.append(p)
        seeds[k] = tuple(pts)
    return RapFluidModel(st, C, D, seed_points=seeds, name=name)


# -- censoring ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CensoredModel:
    """Matrices with the zero-rate regime eliminated.

    ``C^{k*} = C^k + D^{k0} (-C^0)^{-1} D^{0k}`` and
    ``D^{kl*} = D^{kl} + D^{k0} (-C^0)^{-1} D^{0l}``. The raw ``D^{+0}``,
    ``D^{-0}`` and ``C^0`` are kept for the zero-regime density and the
    zero-regime boundary mass; they are ``None`` when there is no zero regime.
    """

    C_plus: np.ndarray
    C_minus: np.ndarray
    D_pm: np.ndarray
    D_mp: np.ndarray
    D_p0: Optional[np.ndarray] = None
    D_m0: Optional[np.ndarray] = None
    C_zero: Optional[np.ndarray] = None
    censored: bool = False

    @property
    def matrices(self):
        return self.C_plus, self.C_minus, self.D_pm, self.D_mp

    def zero_exit(self):
        """``(-C^0)^{-1}``, or ``None`` without a zero regime."""
        if self.C_zero is None:
            return None
        return np.linalg.inv(-self.C_zero)


def censor_zero(model):
    """Eliminate the zero regime; identity when ``n^0 = 0``."""
    if not model.has_zero:
        return CensoredModel(model.C[PLUS], model.C[MINUS],
                             model.D[PLUS, MINUS], model.D[MINUS, PLUS])
    C0 = model.C[ZERO]
    s = np.linalg.svd(C0, compute_uv=False)
    if s[-1] <= 1e-12 * max(1.0, s[0]):
        raise SingularZeroBlockError("C0 is singular")
    if spectral_abscissa(C0) >= 0:
        raise ModelError("C0 is not stable", code="unstable-C0")
    N = np.linalg.solve(-C0, np.hstack([model.D[ZERO, PLUS], model.D[ZERO, MINUS]]))
    Np, Nm = N[:, :model.eta(PLUS)], N[:, model.eta(PLUS):]
    Dp0, Dm0 = model.D[PLUS, ZERO], model.D[MINUS, ZERO]
    return CensoredModel(
        C_plus=_frozen(model.C[PLUS] + Dp0 @ Np),
        C_minus=_frozen(model.C[MINUS] + Dm0 @ Nm),
        D_pm=_frozen(model.D[PLUS, MINUS] + Dp0 @ Nm),
        D_mp=_frozen(model.D[MINUS, PLUS] + Dm0 @ Np),
        D_p0=Dp0, D_m0=Dm0, C_zero=C0, censored=True,
    )
