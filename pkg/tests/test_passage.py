import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rapflow.errors import PsiDivergedError
from rapflow.model import MINUS, PLUS, ZERO, censor_zero, from_markov_jump
from rapflow.passage import (
    confined_mean,
    crossing_expectations,
    downward_record,
    exit_law,
    first_return,
    level_hitting_prob,
    psi_iterates,
    psi_quadrature_oracle,
    psi_residual,
    psi_solve,
    solve_passage,
)
from reference_models import ERLANG_ALPHA, random_generator


def mats(model):
    return censor_zero(model).matrices


@pytest.mark.parametrize("name, expected", [("M1", 1.0), ("M2", 0.5)])
def test_psi_scalar_models(name, expected, request):
    sol = psi_solve(*mats(request.getfixturevalue(name)))
    assert sol.converged
    assert sol.psi[0, 0] == pytest.approx(expected, abs=1e-10)
    assert sol.residual <= 1e-11


def test_psi_critical_model_is_slow(M3):
    # double root: Psi_n approaches 1 like 1 - O(1/n)
    sol = psi_solve(*mats(M3))
    assert not sol.converged
    assert sol.iterations == 10000
    assert abs(sol.psi[0, 0] - 1.0) <= 1e-3
    assert sol.error_estimate >= abs(sol.psi[0, 0] - 1.0) / 10


def test_psi_picks_minimal_root(M1):
    # Psi^2 - 3 Psi + 2 = 0 has roots 1 and 2; the iteration from 0 gives 1
    sol = psi_solve(*mats(M1))
    assert psi_residual(np.array([[2.0]]), *mats(M1)) == pytest.approx(0.0, abs=1e-14)
    assert sol.psi[0, 0] < 1.5


def test_psi_divergence_detected():
    # not a fluid model: the recursion blows up
    with pytest.raises(PsiDivergedError):
        psi_solve([[-1.0]], [[-1.0]], [[10.0]], [[10.0]])


def test_oracle_first_iterate(M1):
    P1 = psi_quadrature_oracle(*mats(M1), n_iters=1, quad_steps=2000)
    assert P1[0, 0] == pytest.approx(2 / 3, abs=1e-6)


@pytest.mark.parametrize("name, expected", [("M1", 1.0), ("M2", 0.5)])
def test_oracle_fifty_iterations(name, expected, request):
    P = psi_quadrature_oracle(*mats(request.getfixturevalue(name)), n_iters=50, quad_steps=2000)
    if name == "M1":
        # M1 converges linearly with ratio 2/3, so compare like with like
        ref = psi_solve(*mats(request.getfixturevalue(name)), max_iter=50).psi
        assert P[0, 0] == pytest.approx(ref[0, 0], abs=1e-6)
    else:
        assert P[0, 0] == pytest.approx(expected, abs=1e-6)


def test_oracle_matches_iterates(erlang):
    P3 = psi_quadrature_oracle(*mats(erlang), n_iters=3, quad_steps=4000)
    it = psi_iterates(*mats(erlang))
    ref = next(itertools.islice(it, 2, None))
    assert np.max(np.abs(P3 - ref)) <= 1e-7


def test_oracle_matches_iterates_on_critical_erlang(erlang):
    # zero drift: both schemes are far from the limit at 200 steps but agree step for step
    O = psi_quadrature_oracle(*mats(erlang), n_iters=200, quad_steps=4000)
    ref = next(itertools.islice(psi_iterates(*mats(erlang)), 199, None))
    assert np.max(np.abs(O - ref)) <= 1e-7
    assert np.max(np.abs(O - psi_solve(*mats(erlang)).psi)) > 1e-3


def test_oracle_on_stable_erlang():
    from rapflow.model import from_me_renewal
    from reference_models import ERLANG_ALPHA, ERLANG_S
    model = from_me_renewal(ERLANG_ALPHA, ERLANG_S, ERLANG_ALPHA, 1.5 * ERLANG_S)
    O = psi_quadrature_oracle(*mats(model), n_iters=200, quad_steps=4000)
    assert np.max(np.abs(O - psi_solve(*mats(model)).psi)) <= 1e-5


def test_first_return(M1, M2):
    assert first_return([1.0], psi_solve(*mats(M1))).prob == pytest.approx(1.0, abs=1e-10)
    fr = first_return([1.0], psi_solve(*mats(M2)))
    assert fr.prob == pytest.approx(0.5, abs=1e-10)
    assert not fr.out_of_range
    with pytest.raises(ValueError):
        first_return([2.0], psi_solve(*mats(M2)))


def test_downward_record(M1, M2):
    ps = solve_passage(M1)
    assert downward_record([1.0], False, 3.0, ps.gens, ps.psi)[0] == pytest.approx(1.0, abs=1e-10)
    ps2 = solve_passage(M2)
    v = downward_record([1.0], True, 1.0, ps2.gens, ps2.psi)
    assert v[0] == pytest.approx(0.5 * np.exp(-1), abs=1e-10)
    beta = np.array([0.25])
    assert np.array_equal(downward_record(beta, False, 0.0, ps2.gens, ps2.psi), beta)
    with pytest.raises(ValueError):
        downward_record([1.0], True, -1.0, ps2.gens, ps2.psi)


def test_level_hitting(M1, M2):
    ps = solve_passage(M1)
    assert level_hitting_prob([1.0], 5.0, ps.gens, ps.psi) == pytest.approx(1.0, abs=1e-9)
    ps2 = solve_passage(M2)
    assert level_hitting_prob([1.0], 1.0, ps2.gens, ps2.psi) == pytest.approx(0.18393972, abs=1e-8)
    assert level_hitting_prob([1.0], 0.0, ps2.gens, ps2.psi) == \
        pytest.approx(first_return([1.0], ps2.psi).prob, abs=1e-15)


def test_crossings(M1, M2):
    ps = solve_passage(M1)
    up, down = crossing_expectations([1.0], 1.0, ps.gens, ps.psi)
    assert up[0] == pytest.approx(np.exp(-1), abs=1e-10)
    assert down[0] == pytest.approx(np.exp(-1), abs=1e-10)
    up0, down0 = crossing_expectations([1.0], 0.0, ps.gens, ps.psi)
    assert up0[0] == 1.0 and down0[0] == pytest.approx(1.0, abs=1e-10)
    ps2 = solve_passage(M2)
    up, down = crossing_expectations([1.0], 2.0, ps2.gens, ps2.psi)
    assert up[0] == pytest.approx(1.0, abs=1e-9)
    assert down[0] == pytest.approx(0.5, abs=1e-9)


def test_exit_law(M1, M4):
    dens, mean = exit_law([1.0], "+", "-", M1)
    assert dens(0.3)[0] == pytest.approx(2 * np.exp(-0.6), rel=1e-13)
    assert mean[0] == pytest.approx(1.0, rel=1e-14)
    _, mean0 = exit_law([1.0], PLUS, ZERO, M4)
    _, mean_m = exit_law([1.0], PLUS, MINUS, M4)
    assert mean0[0] == pytest.approx(0.5, rel=1e-14)
    assert mean0.sum() + mean_m.sum() == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(ValueError):
        exit_law([1.0], PLUS, PLUS, M1)


def test_confined_mean(M1, erlang):
    a = np.array([1.0])
    assert np.array_equal(confined_mean(a, PLUS, 0.0, M1), a)
    assert confined_mean(a, PLUS, 1.0, M1)[0] == pytest.approx(np.exp(-2), rel=1e-14)
    v = confined_mean(ERLANG_ALPHA, PLUS, 1.0, erlang)
    assert np.allclose(v, [np.exp(-1), np.exp(-1)], rtol=1e-13)


def test_censored_entry_point(M4):
    ps = solve_passage(M4)
    assert ps.psi.censored
    assert ps.psi.psi[0, 0] == pytest.approx(1.0, abs=1e-10)


def _random_mjp(seed, n_plus, n_minus):
    r = np.random.default_rng(seed)
    Q = random_generator(r, n_plus + n_minus)
    return from_markov_jump(Q, ["+"] * n_plus + ["-"] * n_minus)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_plus=st.integers(1, 4), n_minus=st.integers(1, 4))
def test_mjp_psi_monotone_and_substochastic(seed, n_plus, n_minus):
    model = _random_mjp(seed, n_plus, n_minus)
    prev = np.zeros((n_plus, n_minus))
    for n, P in enumerate(psi_iterates(*mats(model))):
        assert np.all(P >= prev - 1e-12)
        if np.max(np.abs(P - prev)) <= 1e-13 or n > 3000:
            break
        prev = P
    sol = psi_solve(*mats(model))
    assert np.all(sol.psi >= -1e-14)
    assert np.all(sol.psi.sum(axis=1) <= 1 + 1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_plus=st.integers(1, 4), n_minus=st.integers(1, 4))
def test_recurrent_psi_makes_u_conservative(seed, n_plus, n_minus):
    model = _random_mjp(seed, n_plus, n_minus)
    ps = solve_passage(model)
    if ps.psi.converged and np.max(np.abs(ps.psi.psi.sum(1) - 1)) <= 1e-9:
        assert np.max(np.abs(ps.gens.U.sum(axis=1))) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_plus=st.integers(1, 3), n_minus=st.integers(1, 3),
       xs=st.lists(st.floats(0, 10), min_size=2, max_size=6))
def test_mjp_monotone_in_level(seed, n_plus, n_minus, xs):
    model = _random_mjp(seed, n_plus, n_minus)
    ps = solve_passage(model)
    a = np.full(n_plus, 1.0 / n_plus)
    xs = sorted(xs)
    hit = [level_hitting_prob(a, x, ps.gens, ps.psi) for x in xs]
    ups = [crossing_expectations(a, x, ps.gens, ps.psi)[0].sum() for x in xs]
    assert all(b <= a_ + 1e-10 for a_, b in zip(hit, hit[1:]))
    assert hit[0] <= 1 + 1e-10
    # exp(K x) 1 decays when K is a subgenerator (K is Metzler for these models)
    if np.all(ps.gens.K.sum(axis=1) <= 0):
        assert all(b <= a_ + 1e-10 for a_, b in zip(ups, ups[1:]))


def test_upcrossing_count_can_grow_with_level():
    # drift-up chain: a path may upcross level x several times before returning,
    # so the expected number of upcrossings exceeds one and grows with x
    model = _random_mjp(62, 2, 1)
    ps = solve_passage(model)
    assert np.any(ps.gens.K.sum(axis=1) > 0)
    a = np.array([0.5, 0.5])
    ups = [crossing_expectations(a, x, ps.gens, ps.psi)[0].sum() for x in (0.0, 1.0, 3.0)]
    assert ups[0] == pytest.approx(1.0)
    assert ups[0] < ups[1] < ups[2]
