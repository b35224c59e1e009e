"""Stationary law of the queue regulated at zero.

The law is an atom at zero plus a matrix-exponential density. With a
zero-rate regime the queue can also sit at zero while paused; the
`normalization_residual` diagnostic shows how much mass the boundary
constant leaves out in that case.
"""
import numpy as np

from rapflow import stationary_solve
from rapflow.model import from_markov_jump
from rapflow.stationary import bin_mass, density_eval, stability_check
from rapflow.passage import solve_passage

m1 = from_markov_jump(np.array([[-2.0, 2.0], [1.0, -1.0]]), ["+", "-"])
sol = stationary_solve(m1)
print(f"M1: P(Q = 0) = {sol.c_minus:.12f}   (1/3)")
for x in (0.5, 1.0, 2.0):
    print(f"  pi({x}) = {density_eval(sol, x).pi:.12f}   (2/3)e^-x = {2 / 3 * np.exp(-x):.12f}")
print(f"  P(Q in (0,1)) = {bin_mass(sol, 0, 1):.12f}")
print(f"  total mass - 1 = {sol.normalization_residual:.1e}")

# drift up, drift zero: no stationary law
for Q, what in (([[-1.0, 1.0], [2.0, -2.0]], "upward"), ([[-1.0, 1.0], [1.0, -1.0]], "zero")):
    model = from_markov_jump(np.array(Q), ["+", "-"])
    ps = solve_passage(model)
    rep = stability_check(ps.psi, ps.gens, model)
    print(f"\n{what} drift: {rep.status}, mean drift {rep.mean_drift:+.3f}")
    for r in rep.reasons:
        print("   ", r)

# a paused state that the down regime can enter
Q = np.array([[-2.0, 1.0, 1.0], [1.0, -2.0, 1.0], [0.5, 1.0, -1.5]])
model = from_markov_jump(Q, ["+", "-", "0"])
raw = stationary_solve(model)
unit = stationary_solve(model, normalize=True)
print("\nwith a zero-rate state that the down state feeds:")
print(f"  default boundary constant     c- = {raw.c_minus:.6f}, total mass {raw.diagnostics['total_mass']:.6f}")
print(f"  paused-at-zero atom              = {raw.atom_zero:.6f}  (equals the excess)")
print(f"  rescaled to unit mass         c- = {unit.c_minus:.6f}, paused atom {unit.atom_zero:.6f}")
