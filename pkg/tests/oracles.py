"""Independent reference solutions used only by the tests.

``spectral_fluid_queue`` solves the stationary law of a Markov-modulated
fluid queue (generator ``Q``, unit rates +1/-1/0) without the first-return
matrix: the density on ``(0, inf)`` is a combination of the decaying left
eigenvectors of ``T* R^{-1}`` (zero-rate states eliminated), and the atom at
zero follows from the boundary balance equations and unit total mass.
"""
import numpy as np
import scipy.linalg


def spectral_fluid_queue(Q, labels):
    T = np.asarray(Q, dtype=float)
    lab = np.asarray(labels)
    P, M, Z = (np.flatnonzero(lab == c) for c in "+-0")
    inv0 = np.linalg.inv(-T[np.ix_(Z, Z)]) if Z.size else np.zeros((0, 0))

    def star(a, b):
        r = T[np.ix_(a, b)]
        if Z.size:
            r = r + T[np.ix_(a, Z)] @ inv0 @ T[np.ix_(Z, b)]
        return r

    PM = np.concatenate([P, M])
    n1, n = P.size, PM.size
    R = np.diag([1.0] * n1 + [-1.0] * M.size)
    w, vl = scipy.linalg.eig(star(PM, PM) @ np.linalg.inv(R), left=True, right=False)
    idx = np.flatnonzero(w.real < -1e-10)
    if idx.size != n1:
        raise ValueError("queue is not positive recurrent")
    Phi = vl[:, idx].conj().T
    z = w[idx]
    A = np.zeros((n, n1 + M.size), dtype=complex)
    A[:, :n1] = Phi.T
    A[:n1, n1:] = -star(M, P).T
    A[n1:, n1:] = star(M, M).T
    ns = scipy.linalg.null_space(A)
    if ns.shape[1] != 1:
        raise ValueError("boundary system does not have a one-dimensional solution")
    a, p = ns[:n1, 0], ns[n1:, 0]

    def zero_part(g):
        if not Z.size:
            return np.zeros(0)
        return (g[:n1] @ T[np.ix_(P, Z)] + g[n1:] @ T[np.ix_(M, Z)]) @ inv0

    p0 = p @ T[np.ix_(M, Z)] @ inv0 if Z.size else np.zeros(0)
    G = (a / -z) @ Phi
    total = p.sum() + p0.sum() + G.sum() + zero_part(G).sum()
    a, p, p0 = a / total, (p / total).real, (p0 / total).real

    def density(x):
        g = (a * np.exp(z * x)) @ Phi
        return float((g.sum() + zero_part(g).sum()).real)

    def mass(lo, hi):
        ez = np.exp(z * lo) - (0.0 if np.isinf(hi) else np.exp(z * hi))
        g = (a * ez / -z) @ Phi
        return float((g.sum() + zero_part(g).sum()).real)

    return {"atom_minus": p.sum(), "atom_zero": p0.sum(), "density": density, "mass": mass}
