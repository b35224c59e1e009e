"""Stationary distribution of the fluid queue regulated at level zero.

The stationary law has an atom at zero (while in the down regime, and, with
a zero-rate regime, also while in that regime) and a density on
``(0, inf)`` split by regime:

    Pi+(x) = c- v0 D-+ exp(K x)
    Pi-(x) = Pi+(x) Psi
    Pi0(x) = Pi+(x) [D+0 + Psi D-0] (-C0)^{-1}

with ``K = C+ + Psi D-+`` and ``v0`` the normalised left null vector of
``U = C- + D-+ Psi`` (censored matrices when a zero regime exists).
"""
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .errors import NotPositiveRecurrentError
from .linalg import expm, inf_norm, left_null_vector, spectral_abscissa
from .model import MINUS, PLUS, ZERO
from .passage import PsiSolution, RecordGenerators, solve_passage

__all__ = [
    "StabilityReport",
    "StationarySolution",
    "Density",
    "mean_drift",
    "stability_check",
    "stationary_solve",
    "density_eval",
    "bin_mass",
]

V0_TOL = 1e-7


@dataclass(frozen=True)
class StabilityReport:
    psi_row_sum_error: float
    abscissa_K: float
    u_zero_count: int
    u_simple_zero: bool
    tolerance: float
    psi_converged: bool
    status: str
    mean_drift: Optional[float] = None
    reasons: tuple = ()

    @property
    def positive_recurrent(self):
        return self.status == "positive-recurrent"


def mean_drift(model):
    """Long-run average level slope ``p+ 1 - p- 1``.

    ``p`` is the normalised left null vector of the full matrix
    ``[[C+, D+-, D+0], [D-+, C-, D-0], [D0+, D0-, C0]]``, whose regime blocks
    give the long-run fraction of time spent in each regime.
    """
    regs = model.regimes
    G = np.block([[model.C[k] if k == l else model.D[k, l] for l in regs] for k in regs])
    p = left_null_vector(G, tol=V0_TOL)
    n_plus, n_minus = model.eta(PLUS), model.eta(MINUS)
    return float(p[:n_plus].sum() - p[n_plus:n_plus + n_minus].sum())


def stability_check(psi, gens, model=None):
    """Assess positive recurrence from ``Psi`` and the record generators.

    Requirements: ``Psi 1 = 1``, ``abscissa(K) < 0`` and a simple zero
    eigenvalue of ``U``. Tolerances widen with the solver's own error
    estimate so that slowly converging (critical) models are classified
    from what the iteration can actually resolve. Never raises.
    """
    P = psi.psi if isinstance(psi, PsiSolution) else np.asarray(psi, dtype=float)
    err = psi.error_estimate if isinstance(psi, PsiSolution) else 0.0
    conv = psi.converged if isinstance(psi, PsiSolution) else True
    if not np.isfinite(err):
        err = 1.0
    U, K = gens
    scale = max(1.0, inf_norm(U), inf_norm(K))
    tol = 1e-9 + 10.0 * err * scale
    row_err = float(np.max(np.abs(P.sum(axis=1) - 1.0)))
    aK = spectral_abscissa(K)
    ev = np.linalg.eigvals(U)
    ztol = V0_TOL * max(1.0, inf_norm(U)) + 10.0 * err * scale
    nzero = int(np.sum(np.abs(ev) <= ztol))
    drift = None
    if model is not None:
        try:
            drift = mean_drift(model)
        except Exception:
            drift = None

    reasons = []
    if not conv:
        reasons.append("Psi iteration did not converge")
    if row_err > tol:
        status = "transient"
        reasons.append(f"Psi 1 != 1 (max deviation {row_err:.3e})")
    elif aK >= -tol:
        status = "null-recurrent"
        reasons.append(f"abscissa(K) = {aK:.3e} is not negative")
    elif nzero != 1:
        status = "eigenzero-violation"
        reasons.append(f"U has {nzero} eigenvalues at zero")
    else:
        status = "positive-recurrent"
    return StabilityReport(row_err, aK, nzero, nzero == 1, tol, conv, status, drift, tuple(reasons))


@dataclass(frozen=True)
class StationarySolution:
    v0: np.ndarray
    c_minus: float
    K: np.ndarray
    psi: np.ndarray
    boundary_row: np.ndarray  # c- v0 D-+
    zero_map: Optional[np.ndarray]  # [D+0 + Psi D-0] (-C0)^{-1}
    zero_boundary: Optional[np.ndarray]  # c- v0 D-0 (-C0)^{-1}
    zero_part: Optional[tuple]  # (D+0, D-0, C0)
    stability: StabilityReport
    diagnostics: dict = field(default_factory=dict)

    @property
    def atom_minus(self):
        return self.c_minus

    @property
    def atom_zero(self):
        return 0.0 if self.zero_boundary is None else float(self.zero_boundary.sum())

    @property
    def normalization_residual(self):
        return self.diagnostics["normalization_residual"]

    def normalized(self):
        """Copy rescaled so that atoms plus density integrate to one.

        The printed boundary constant leaves the zero-regime boundary atom out
        of the normalisation; when that atom is positive the total mass
        exceeds one by exactly its size. Rescaling every component by the
        total mass gives the stationary law (checked against an independent
        spectral solution and against simulation).
        """
        total = self.diagnostics["total_mass"]
        diag = dict(self.diagnostics)
        diag.update(normalization_residual=0.0, total_mass=1.0, scaled_by=total,
                    formula_c_minus=self.c_minus,
                    density_mass=self.diagnostics["density_mass"] / total,
                    zero_boundary_mass=self.diagnostics["zero_boundary_mass"] / total)
        zb = None if self.zero_boundary is None else self.zero_boundary / total
        return replace(self, c_minus=self.c_minus / total,
                       boundary_row=self.boundary_row / total,
                       zero_boundary=zb, diagnostics=diag)

    def _weights(self):
        # column vector turning Pi+(x) into pi(x)
        w = np.ones(self.K.shape[0]) + self.psi.sum(axis=1)
        if self.zero_map is not None:
            w = w + self.zero_map.sum(axis=1)
        return w


class Density(NamedTuple):
    pi_plus: np.ndarray
    pi_minus: np.ndarray
    pi_zero: np.ndarray
    pi: float


def stationary_solve(model, tol=1e-12, max_iter=10000, normalize=False):
    """Boundary atoms and density components of the regulated queue.

    Without a zero regime
    ``c- = (1 - 2 v0 D-+ K^{-1} 1)^{-1}``; with one,
    ``c- = (1 - v0 D-+ K^{-1} (2 1 + [D+0 + Psi D-0] (-C0)^{-1} 1))^{-1}``
    (starred matrices throughout). The zero-regime boundary vector
    ``c- v0 D-0 (-C0)^{-1}`` is reported, and ``diagnostics`` holds the total
    mass of atoms plus density and its deviation from one.

    That deviation equals the zero-regime boundary atom, so it vanishes when
    ``D-0 = 0``. With ``normalize=True`` the result is rescaled to unit mass
    (see :meth:`StationarySolution.normalized`); by default the constant is
    returned exactly as the formula gives it.

    Raises
    ------
    NotPositiveRecurrentError
        If :func:`stability_check` fails; the report is attached as
        ``exc.report``.
    EigenZeroViolation
        If ``U`` has no simple zero eigenvalue.
    """
    ps = solve_passage(model, tol=tol, max_iter=max_iter)
    report = stability_check(ps.psi, ps.gens, model)
    if not report.positive_recurrent:
        exc = NotPositiveRecurrentError(f"{report.status}: {'; '.join(report.reasons)}")
        exc.report = report
        raise exc
    cm = ps.censored_model
    P = ps.psi.psi
    U, K = ps.gens
    Dmp = cm.D_mp
    v0 = left_null_vector(U, tol=V0_TOL)
    ones = np.ones(K.shape[0])
    zero_map = zero_part = None
    z1 = np.zeros(K.shape[0])
    if cm.censored:
        inv0 = cm.zero_exit()
        zero_map = (cm.D_p0 + P @ cm.D_m0) @ inv0
        z1 = zero_map.sum(axis=1)
        zero_part = (cm.D_p0, cm.D_m0, cm.C_zero)
    Kinv_w = np.linalg.solve(K, 2.0 * ones + z1)
    c = 1.0 / (1.0 - v0 @ Dmp @ Kinv_w)
    zero_boundary = None
    if cm.censored:
        zero_boundary = c * (v0 @ cm.D_m0 @ cm.zero_exit())
    boundary_row = c * (v0 @ Dmp)

    # mass from closed-form integrals, using Psi 1 as computed
    w = ones + P.sum(axis=1) + z1
    density_mass = float(boundary_row @ np.linalg.solve(-K, w))
    zero_atom = 0.0 if zero_boundary is None else float(zero_boundary.sum())
    total = c + zero_atom + density_mass
    diag = {
        "normalization_residual": total - 1.0,
        "total_mass": total,
        "density_mass": density_mass,
        "zero_boundary_mass": zero_atom,
        "v0_residual": inf_norm(v0[None, :] @ U),
        "psi_iterations": ps.psi.iterations,
        "psi_residual": ps.psi.residual,
    }
    sol = StationarySolution(v0, float(c), K, P, boundary_row, zero_map,
                             zero_boundary, zero_part, report, diag)
    return sol.normalized() if normalize else sol


def density_eval(sol, x):
    """Density components at level ``x > 0`` (``x = 0`` gives the right limit).

    Returns ``Density(pi_plus, pi_minus, pi_zero, pi)``; ``pi_zero`` is empty
    without a zero regime.
    """
    x = float(x)
    if not np.isfinite(x) or x < 0:
        raise ValueError(f"x must be finite and non-negative, got {x}")
    pp = sol.boundary_row @ expm(sol.K, x)
    pm = pp @ sol.psi
    pz = pp @ sol.zero_map if sol.zero_map is not None else np.zeros(0)
    pi = float(pp.sum() + pm.sum() + pz.sum())
    return Density(pp, pm, pz, pi)


def bin_mass(sol, a, b):
    """Stationary probability of ``Q in (a, b)`` for ``0 <= a < b <= inf``."""
    a = float(a)
    b = float(b)
    if not 0 <= a < b:
        raise ValueError("need 0 <= a < b")
    Ea = expm(sol.K, a)
    Eb = np.zeros_like(Ea) if np.isinf(b) else expm(sol.K, b)
    return float(sol.boundary_row @ np.linalg.solve(-sol.K, (Ea - Eb) @ sol._weights()))
