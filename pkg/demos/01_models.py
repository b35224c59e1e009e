"""Building and checking models.

Three ways to get a RAP-modulated fluid model: matrices given directly, a
Markov jump process with a regime per state, and renewal processes whose
period lengths are matrix-exponential. Then validation and censoring of a
zero-rate regime.
"""
import numpy as np

from rapflow import RapFluidModel, censor_zero, validate
from rapflow.model import from_markov_jump, from_markov_renewal_me, from_me_renewal

np.set_printoptions(precision=4, suppress=True)

# a two-state chain: up at rate-2 exits, down at rate-1 exits
m1 = RapFluidModel.from_matrices([[-2.0]], [[-1.0]], [[2.0]], [[1.0]], name="M1")
same = from_markov_jump(np.array([[-2.0, 2.0], [1.0, -1.0]]), ["+", "-"])
print("direct and MJP constructions agree:",
      all(np.array_equal(m1.C[k], same.C[k]) for k in ("+", "-")))

# Erlang-2 up periods, exponential down periods
S = np.array([[-1.0, 1.0], [0.0, -1.0]])
erl = from_me_renewal([1.0, 0.0], S, [1.0], [[-0.8]])
print("\nErlang/exponential renewal, D+- =")
print(erl.D["+", "-"])

# a matrix-exponential period that is not phase-type: density e^{-t}(1-t)^2
me = {
    "+": [(np.array([1.0]), np.array([[-1.0]])),
          (np.array([1.0, 0.0, 0.0]),
           np.array([[-1.0, 1.0, -1.0], [0.0, -1.0, 2.0], [0.0, 0.0, -1.0]]))],
    "-": [(np.array([0.5, 0.5]), np.array([[-3.0, 0.0], [0.0, -2.0]]))],
}
P = {("+", "+"): [[0.0, 0.3], [0.0, 0.0]], ("+", "-"): [[0.7], [1.0]], ("-", "+"): [[0.5, 0.5]]}
mr = from_markov_renewal_me(P, me)
print("\nMarkov-renewal ME blocks:", mr.structure.to_dict())

rep = validate(mr)
for c in rep.checks:
    print(f"  {'ok ' if c.passed else 'BAD'} {c.name:28s} {c.detail}")
print("assumed, not checked:")
for a in rep.assumptions:
    print("  -", a)

# a block whose survival function rises somewhere is rejected
bad = {"+": [(np.array([1.0]), np.array([[-1.0]])),
             (np.array([1.0, 0.0]), np.array([[-1.0, 3.0], [0.0, -1.0]]))],
       "-": me["-"]}
print("\nbroken ME block valid?", validate(from_markov_renewal_me(P, bad)).ok)

# censoring a zero-rate regime: M1 plus a pause state
m4 = RapFluidModel.from_matrices(
    [[-2.0]], [[-1.0]], [[1.0]], [[1.0]],
    C_zero=[[-1.0]], D_p0=[[1.0]], D_m0=[[0.0]], D_0p=[[0.0]], D_0m=[[1.0]], name="M4")
cm = censor_zero(m4)
print("\ncensored M4:", [float(x[0, 0]) for x in cm.matrices], "(M1 is [-2, -1, 2, 1])")
