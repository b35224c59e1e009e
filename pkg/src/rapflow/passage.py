"""First-return, downward-record, hitting and crossing quantities.

The central object is the first-return matrix ``Psi``: for an initial orbit
``alpha`` in the up regime, ``alpha @ Psi`` is the expected orbit at the first
return of the level to its starting value. ``Psi`` is the limit of the
monotone scheme

    C+ Psi_{n+1} + Psi_{n+1} C- = -D+- - Psi_n D-+ Psi_n,    Psi_0 = 0,

and every other quantity here is a matrix exponential built from it. When
the model has a zero-rate regime, all formulas take the censored matrices
(see :func:`rapflow.model.censor_zero`); :func:`solve_passage` does this
automatically.
"""
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ModelError, PsiDivergedError
from .linalg import SylvesterOperator, as_matrix, as_row, expm, expm_batch, inf_norm, spectral_abscissa
from .model import MINUS, PLUS, Regime, censor_zero

__all__ = [
    "PsiSolution",
    "RecordGenerators",
    "PassageSolution",
    "psi_iterates",
    "psi_solve",
    "psi_residual",
    "psi_quadrature_oracle",
    "record_generators",
    "solve_passage",
    "first_return",
    "downward_record",
    "level_hitting_prob",
    "crossing_expectations",
    "exit_law",
    "confined_mean",
]

DIVERGENCE_NORM = 1e6


@dataclass(frozen=True)
class PsiSolution:
    """Result of the first-return fixed-point iteration.

    ``step`` is the last increment ``||Psi_n - Psi_{n-1}||``; ``error_estimate``
    extrapolates the remaining distance to the limit from the observed
    contraction of successive increments. Near a critical model (zero mean
    drift) convergence is sublinear and ``error_estimate`` stays large.
    """

    psi: np.ndarray
    iterations: int
    residual: float
    converged: bool
    censored: bool = False
    step: float = float("nan")
    error_estimate: float = float("nan")

    def __array__(self, dtype=None):
        return np.asarray(self.psi, dtype=dtype)


class RecordGenerators(NamedTuple):
    """``U = C- + D-+ Psi`` (downward record) and ``K = C+ + Psi D-+`` (crossings)."""

    U: np.ndarray
    K: np.ndarray


def _check_fluid(Cp, Cm, Dpm, Dmp):
    Cp = as_matrix(Cp, "C+", square=True)
    Cm = as_matrix(Cm, "C-", square=True)
    Dpm = as_matrix(Dpm, "D+-")
    Dmp = as_matrix(Dmp, "D-+")
    p, m = Cp.shape[0], Cm.shape[0]
    if Dpm.shape != (p, m) or Dmp.shape != (m, p):
        raise ValueError(
            f"inconsistent shapes: C+ {Cp.shape}, C- {Cm.shape}, "
            f"D+- {Dpm.shape}, D-+ {Dmp.shape}"
        )
    return Cp, Cm, Dpm, Dmp


def psi_residual(psi, Cp, Cm, Dpm, Dmp):
    """``||C+ Psi + Psi C- + D+- + Psi D-+ Psi||_inf``."""
    return inf_norm(Cp @ psi + psi @ Cm + Dpm + psi @ Dmp @ psi)


def psi_iterates(Cp, Cm, Dpm, Dmp):
    """Yield ``Psi_1, Psi_2, ...`` of the Sylvester recursion from ``Psi_0 = 0``."""
    Cp, Cm, Dpm, Dmp = _check_fluid(Cp, Cm, Dpm, Dmp)
    op = SylvesterOperator(Cp, Cm)
    psi = np.zeros(Dpm.shape)
    while True:
        psi = op.solve(-Dpm - psi @ Dmp @ psi)
        yield psi


def psi_solve(Cp, Cm, Dpm, Dmp, tol=1e-12, max_iter=10000, censored=False):
    """Minimal solution of the first-return quadratic matrix equation.

    Iterates from ``Psi_0 = 0`` until both the increment and the equation
    residual are small:

    * ``||Psi_{n+1} - Psi_n|| <= tol * max(1, ||Psi_n||)``
    * ``residual <= tol``, or ``residual <= 10 * tol * max(1, ||D+-||)`` once
      the residual has stalled at its rounding floor

    Returns a :class:`PsiSolution`; ``converged`` is ``False`` if
    ``max_iter`` is reached first.

    Raises
    ------
    SylvesterSingularError
        If ``C+`` and ``-C-`` share an eigenvalue.
    PsiDivergedError
        If an iterate's norm exceeds ``1e6``.
    """
    Cp, Cm, Dpm, Dmp = _check_fluid(Cp, Cm, Dpm, Dmp)
    if spectral_abscissa(Cp) >= 0 or spectral_abscissa(Cm) >= 0:
        raise ModelError("C+ and C- must have negative spectral abscissa",
                         code="unstable-C")
    res_tol = 10 * tol * max(1.0, inf_norm(Dpm))
    prev = np.zeros(Dpm.shape)
    prev_step = np.inf
    step = np.inf
    err = np.inf
    last_res = np.inf
    n = 0
    for n, psi in enumerate(psi_iterates(Cp, Cm, Dpm, Dmp), start=1):
        nrm = inf_norm(psi)
        if not np.isfinite(nrm) or nrm > DIVERGENCE_NORM:
            raise PsiDivergedError(f"iterate {n} has norm {nrm:.3e}")
        step = inf_norm(psi - prev)
        rate = step / prev_step if prev_step > 0 else 0.0
        err = step * rate / (1.0 - rate) if rate < 1.0 else np.inf
        prev, prev_step = psi, step
        if step <= tol * max(1.0, nrm):
            res = psi_residual(psi, Cp, Cm, Dpm, Dmp)
            stalled = res >= last_res
            if res <= tol or (stalled and res <= res_tol):
                return PsiSolution(psi, n, res, True, censored, step, max(err, step))
            last_res = res
        if n >= max_iter:
            break
    res = psi_residual(prev, Cp, Cm, Dpm, Dmp)
    return PsiSolution(prev, n, res, False, censored, step, max(err, step))


def psi_quadrature_oracle(Cp, Cm, Dpm, Dmp, n_iters=200, quad_steps=4000):
    """``Psi_n`` from the integral recursion, by composite Simpson quadrature.

    ``Psi_n = int_0^inf exp(C+ y) (D+- + Psi_{n-1} D-+ Psi_{n-1}) exp(C- y) dy``,
    truncated at ``T = 40 / |a|`` where ``a`` is the larger of the two
    spectral abscissae. Independent of :func:`psi_solve`; intended as a test
    oracle.
    """
    Cp, Cm, Dpm, Dmp = _check_fluid(Cp, Cm, Dpm, Dmp)
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    a = max(spectral_abscissa(Cp), spectral_abscissa(Cm))
    if a >= 0:
        raise ModelError("C+ and C- must have negative spectral abscissa",
                         code="unstable-C")
    steps = int(quad_steps) + (int(quad_steps) % 2)
    T = 40.0 / abs(a)
    y = np.linspace(0.0, T, steps + 1)
    w = np.ones(steps + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (T / steps) / 3.0
    Ep = expm_batch(Cp, y) * w[:, None, None]
    Em = expm_batch(Cm, y)
    psi = np.zeros(Dpm.shape)
    for _ in range(n_iters):
        M = Dpm + psi @ Dmp @ psi
        psi = np.einsum("tij,jk,tkl->il", Ep, M, Em)
    return psi


def record_generators(psi, Cp, Cm, Dpm, Dmp):
    psi = np.asarray(psi, dtype=float)
    return RecordGenerators(U=Cm + Dmp @ psi, K=Cp + psi @ Dmp)


@dataclass(frozen=True)
class PassageSolution:
    """``Psi``, the record generators and the (possibly censored) matrices."""

    censored_model: object
    psi: PsiSolution
    gens: RecordGenerators

    @property
    def matrices(self):
        return self.censored_model.matrices


def solve_passage(model, tol=1e-12, max_iter=10000):
    """Single entry point: censor the zero regime if present, then solve for Psi."""
    cm = censor_zero(model)
    sol = psi_solve(*cm.matrices, tol=tol, max_iter=max_iter, censored=cm.censored)
    return PassageSolution(cm, sol, record_generators(sol.psi, *cm.matrices))


def _psi_matrix(psi):
    return psi.psi if isinstance(psi, PsiSolution) else np.asarray(psi, dtype=float)


def _check_alpha(alpha, n, name="alpha"):
    alpha = as_row(alpha, name)
    if alpha.size != n:
        raise ValueError(f"{name} has length {alpha.size}, expected {n}")
    if abs(alpha.sum() - 1.0) > 1e-10:
        raise ValueError(f"{name} must sum to one (sums to {alpha.sum():.15g})")
    return alpha


def _check_x(x):
    x = float(x)
    if not np.isfinite(x) or x < 0:
        raise ValueError(f"x must be finite and non-negative, got {x}")
    return x


class FirstReturn(NamedTuple):
    vector: np.ndarray
    prob: float
    out_of_range: bool


def first_return(alpha, psi):
    """Expected orbit at the first return to the starting level, and its probability.

    Returns ``(alpha Psi, alpha Psi 1, flag)`` where ``flag`` marks a
    probability outside ``[-1e-9, 1 + 1e-9]`` (a sign of an invalid model).
    """
    P = _psi_matrix(psi)
    alpha = _check_alpha(alpha, P.shape[0])
    vec = alpha @ P
    prob = float(vec.sum())
    return FirstReturn(vec, prob, not (-1e-9 <= prob <= 1 + 1e-9))


def downward_record(start, from_plus, x, gens, psi):
    """Expected orbit when the level first reaches ``-x`` (zero if never).

    From the down regime this is ``beta exp(U x)``; from the up regime
    ``alpha Psi exp(U x)``.
    """
    x = _check_x(x)
    P = _psi_matrix(psi)
    if from_plus:
        start = as_row(start, "alpha")
        if start.size != P.shape[0]:
            raise ValueError(f"alpha has length {start.size}, expected {P.shape[0]}")
        start = start @ P
    else:
        start = as_row(start, "beta")
        if start.size != P.shape[1]:
            raise ValueError(f"beta has length {start.size}, expected {P.shape[1]}")
    return start @ expm(gens.U, x)


def level_hitting_prob(alpha, x, gens, psi):
    """Probability that the level ever reaches ``-x`` from an up-regime start."""
    return float(downward_record(alpha, True, x, gens, psi).sum())


def crossing_expectations(alpha, x, gens, psi):
    """Summed expected orbit over up- and down-crossings of level ``x`` before return.

    Returns ``(alpha exp(K x), alpha exp(K x) Psi)``.
    """
    x = _check_x(x)
    P = _psi_matrix(psi)
    alpha = as_row(alpha, "alpha")
    if alpha.size != P.shape[0]:
        raise ValueError(f"alpha has length {alpha.size}, expected {P.shape[0]}")
    up = alpha @ expm(gens.K, x)
    return up, up @ P


def exit_law(alpha, k, ell, model):
    """Law of the orbit at the first exit from regime ``k`` into regime ``ell``.

    Returns ``(density, mean)`` where ``density(t) = alpha exp(C^k t) D^{k ell}``
    and ``mean = alpha (-C^k)^{-1} D^{k ell}``; ``mean.sum()`` is the
    probability that the exit lands in ``ell``.
    """
    k, ell = Regime.parse(k), Regime.parse(ell)
    if k == ell:
        raise ValueError("k and ell must differ")
    Ck, Dkl = model.C[k], model.D[k, ell]
    alpha = as_row(alpha, "alpha")
    if alpha.size != Ck.shape[0]:
        raise ValueError(f"alpha has length {alpha.size}, expected {Ck.shape[0]}")

    def density(t):
        return alpha @ expm(Ck, t) @ Dkl

    mean = np.linalg.solve(-Ck.T, alpha) @ Dkl
    return density, mean


def confined_mean(alpha, k, t, model):
    """``E[A_t; orbit stayed in regime k on [0, t]] = alpha exp(C^k t)``.

    Its row sum is the probability of not having left regime ``k`` by ``t``.
    """
    k = Regime.parse(k)
    alpha = as_row(alpha, "alpha")
    Ck = model.C[k]
    if alpha.size != Ck.shape[0]:
        raise ValueError(f"alpha has length {alpha.size}, expected {Ck.shape[0]}")
    return alpha @ expm(Ck, t)
