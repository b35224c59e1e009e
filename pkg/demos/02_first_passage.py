"""First return, level hitting and crossings.

Psi is the expected orbit at the first return of the level to its starting
value. From it come two generators: U for the downward record process and
K for expected up-crossings.
"""
import numpy as np

from rapflow import solve_passage
from rapflow.model import censor_zero, from_markov_jump, from_me_renewal
from rapflow.passage import (
    crossing_expectations,
    first_return,
    level_hitting_prob,
    psi_quadrature_oracle,
)

np.set_printoptions(precision=6, suppress=True)

# upward drift: returns with probability 1/2
m2 = from_markov_jump(np.array([[-1.0, 1.0], [2.0, -2.0]]), ["+", "-"])
ps = solve_passage(m2)
print("M2 Psi =", ps.psi.psi.ravel(), f"after {ps.psi.iterations} iterations")
for x in (0.0, 1.0, 2.0):
    print(f"  P(reach -{x:g}) = {level_hitting_prob([1.0], x, ps.gens, ps.psi):.6f}"
          f"   closed form 0.5 exp(-x) = {0.5 * np.exp(-x):.6f}")

# Erlang-2 up periods against shorter Erlang-2 down periods; still drifts up
S = np.array([[-1.0, 1.0], [0.0, -1.0]])
erl = from_me_renewal([1.0, 0.0], S, [1.0, 0.0], 1.5 * S)
ps = solve_passage(erl)
fr = first_return([1.0, 0.0], ps.psi)
print("\nErlang Psi =\n", ps.psi.psi)
print("return probability", round(fr.prob, 12), "landing orbit", fr.vector)

# the same matrix from a slow but independent route: the integral recursion
O = psi_quadrature_oracle(*censor_zero(erl).matrices, n_iters=200, quad_steps=4000)
print("max |Psi - quadrature| =", np.abs(O - ps.psi.psi).max())

# expected up-crossings of level x before returning to 0
for x in (0.5, 2.0, 5.0):
    up, down = crossing_expectations([1.0, 0.0], x, ps.gens, ps.psi)
    print(f"  x={x:3g}: E[up-crossings] = {up.sum():.5f}, E[down-crossings] = {down.sum():.5f}")
