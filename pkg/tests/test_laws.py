import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import tv_distance_columns, tv_gamma
from zerotwo.algebra import AlgebraShape
from zerotwo.channels import depolarizing, schur, stochastic, swap_conjugation, unitary_conjugation
from zerotwo.errors import CommutationViolated, InvalidInput, PremiseViolated
from zerotwo.laws import (
    CommutingFamily,
    ConvergesToZero,
    MultiIndex,
    StaysNearTwo,
    Undetermined,
    classify,
    corollary14_experiment,
    default_schedule,
    difference_norm_sequence,
    ell_for_eps,
    gamma_envelope_holds,
    gamma_envelope_violations,
    gamma_exact,
    gamma_oracle,
    halving_defect,
    meet_classical,
    multi_power,
    q_sequence,
    ray_monotonicity_defect,
    theorem12_experiment,
    v_table,
    zaharopol_check,
    zn0_experiment,
)
from zerotwo.superop import NormEstimate, SuperOperator, norm_positive, power

QUBIT = AlgebraShape([2])
I2 = SuperOperator.identity(QUBIT)


def max_entry(a, b):
    return float(np.max(np.abs(a.matrix - b.matrix)))


# --- multi-indices and families ----------------------------------------------


def test_multi_index_arithmetic():
    a, b = MultiIndex((1, 2)), MultiIndex((3, 2))
    assert (a + b).entries == (4, 4) and (b - a).entries == (2, 0) and (a * 3).entries == (3, 6)
    assert a.leq(b) and not b.leq(a) and b.total == 5
    assert MultiIndex.zeros(3).entries == (0, 0, 0) and MultiIndex.unit(2, 1).entries == (0, 1)
    with pytest.raises(InvalidInput):
        MultiIndex((1, -1))
    with pytest.raises(InvalidInput):
        a - b
    with pytest.raises(InvalidInput):
        a + MultiIndex((1,))


def test_multi_power_examples():
    T1, T2 = depolarizing(QUBIT, 0.3), schur(QUBIT, [[1, 0.4], [0.4, 1]])
    assert multi_power([T1, T2], (0, 0)).max_abs_diff(I2) == 0
    assert multi_power([T1], 4).max_abs_diff(power(T1, 4)) == 0
    ab = multi_power([T1, T2], (2, 3))
    ba = power(T2, 3) @ power(T1, 2)
    assert ab.max_abs_diff(ba) <= 1e-9


def test_non_commuting_family_is_rejected():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    with pytest.raises(CommutationViolated) as info:
        CommutingFamily([unitary_conjugation(QUBIT, h), schur(QUBIT, [[1, 0.5], [0.5, 1]])])
    assert info.value.defect > 1e-9


# --- dichotomy sequence ------------------------------------------------------


def test_depolarizing_sequence_and_monotonicity():
    p = 0.35
    rep = difference_norm_sequence(depolarizing(QUBIT, p), 1, range(21), eps=1e-3)
    for (n, est) in rep.samples:
        assert abs(est.lower - p * (1 - p) ** n[0]) <= 1e-6
    assert ray_monotonicity_defect(rep) <= 2e-6
    # p(1-p)^13 > 1e-3 > p(1-p)^14
    assert rep.classification == ConvergesToZero(1e-3, MultiIndex(14))
    assert rep.rows()[3][:1] == (3,)


def test_swap_sequence_stays_at_two():
    rep = difference_norm_sequence(swap_conjugation(), 1, range(10))
    assert all(abs(v - 2) <= 1e-9 for v in rep.values())
    assert isinstance(rep.classification, StaysNearTwo)


def test_identity_with_zero_shift():
    rep = difference_norm_sequence(I2, 0, range(5))
    assert rep.values() == [0.0] * 5
    assert isinstance(rep.classification, ConvergesToZero)


def test_two_parameter_monotonicity():
    fam = [depolarizing(QUBIT, 0.2), schur(QUBIT, [[1, 0.6], [0.6, 1]])]
    rep = difference_norm_sequence(fam, (1, 0), default_schedule(2, 6))
    assert ray_monotonicity_defect(rep) <= 2e-6


def test_classify_thresholds():
    w = None

    def est(v):
        return NormEstimate(v, v, w, True)

    pts = [MultiIndex(i) for i in range(4)]
    c = classify(list(zip(pts, [est(0.5), est(0.01), est(1e-4), est(1e-5)])), eps=1e-3)
    assert c == ConvergesToZero(1e-3, MultiIndex(2))
    assert isinstance(classify([(pts[0], est(2.0))]), StaysNearTwo)
    assert isinstance(classify([(pts[0], est(1.0))]), Undetermined)


# --- gamma and halving -------------------------------------------------------


def test_gamma_examples():
    assert gamma_oracle(1) == 1 and gamma_oracle(2) == 1 and gamma_oracle(4) == 0.75
    with pytest.raises(InvalidInput):
        gamma_oracle(0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 400))
def test_gamma_matches_direct_summation(ell):
    assert gamma_exact(ell) == tv_gamma(ell)
    assert gamma_envelope_holds(ell)


def test_envelope_incremental_matches_direct():
    assert gamma_envelope_violations(500) == [ell for ell in range(1, 501) if not gamma_envelope_holds(ell)] == []


def test_ell_for_eps_is_minimal():
    for eps in (1.9, 1.0, 0.5, 0.1):
        ell = ell_for_eps(eps)
        assert tv_gamma(ell) < eps / 2
        assert ell == 1 or tv_gamma(ell - 1) >= eps / 2
    assert ell_for_eps(1.9) == 3
    assert ell_for_eps(0.1) == 1019
    with pytest.raises(InvalidInput):
        ell_for_eps(0)


def test_halving_examples():
    assert halving_defect(I2, 1, 5).upper == 0
    est = halving_defect(depolarizing(QUBIT, 0.4), 1, 16)
    assert est.upper <= 0.5
    shift = stochastic(np.roll(np.eye(40), 1, axis=0))
    for ell in (1, 3, 8):
        est = halving_defect(shift, 1, ell)
        assert est.lower == pytest.approx(float(tv_gamma(ell)), abs=1e-12)


def test_halving_on_classical_kernel_matches_columns():
    a = np.array([[0.1, 0.5, 0.3], [0.6, 0.2, 0.3], [0.3, 0.3, 0.4]])
    h = (np.eye(3) + a) / 2
    hl = np.linalg.matrix_power(h, 5)
    est = halving_defect(stochastic(a), 1, 5)
    assert est.lower == pytest.approx(tv_distance_columns(hl - a @ hl), abs=1e-12)


# --- Q and V identities ------------------------------------------------------


def test_q_sequence_collapse_cases():
    T = depolarizing(QUBIT, 0.3)
    m, k = 2, 1
    tm, tmk = power(T, m), power(T, m + k)
    tr = q_sequence(T, tm, m, k, 4)
    assert max_entry(tr.Q[1], 0.5 * (tmk - tm)) <= 1e-12
    assert tr.residual_T3 <= 1e-12
    zero = SuperOperator.zero(QUBIT)
    tr = q_sequence(T, zero, m, k, 4)
    for ell in range(1, 5):
        assert max_entry(tr.Q[ell], power(T, ell * (m + k))) <= 1e-12
    assert tr.residual_T3 <= 1e-12


def test_q_and_v_residuals_on_depolarizing_family():
    shape = AlgebraShape([2, 2], [1.0, 0.5])
    fam = [depolarizing(shape, 0.3), depolarizing(shape, 0.6)]
    m, k = (1, 2), (1, 0)
    S = 0.5 * multi_power(fam, m)
    tr = q_sequence(fam, S, m, k, 5)
    assert tr.residual_T3 <= 1e-10
    tr = v_table(fam, S, m, k, 3, 4, trace=tr)
    assert tr.residual_T4 <= 1e-10
    assert max_entry(tr.V[(1, 3)], power(S, 3)) <= 1e-12


def test_v_table_collapse_cases():
    T = depolarizing(QUBIT, 0.5)
    zero = SuperOperator.zero(QUBIT)
    tr = v_table(T, zero, 1, 1, 2, 4)
    for d in range(1, 5):
        # with S = 0 only T^{l(m+k)} V^(d-1) remains, starting from V^(1) = 0
        assert np.max(np.abs(tr.V[(d, 2)].matrix)) == 0
    assert tr.residual_T4 <= 1e-12


def test_q_sequence_rejects_non_commuting_z():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    with pytest.raises(CommutationViolated):
        q_sequence(depolarizing(QUBIT, 0.2), schur(QUBIT, [[1, 0.5], [0.5, 1]]), 1, 1, 2, Z=unitary_conjugation(QUBIT, h))


# --- ZN0 -----------------------------------------------------------------------


def test_zn0_scalar_factorization():
    S = depolarizing(AlgebraShape([3]), 0.4)
    c = 0.7
    rep = zn0_experiment(SuperOperator.identity(S.domain), c * S, S, 1, 25)
    for n, val in rep.norms:
        assert val == pytest.approx(1 - c**n, abs=1e-12)
    assert rep.holds and rep.margin > 0


def test_zn0_equal_maps_and_two_state_chain():
    a = 0.3
    S = stochastic([[1 - a, a], [a, 1 - a]])
    Z = SuperOperator.identity(S.domain)
    assert all(v == 0 for _, v in zn0_experiment(Z, S, S, 1, 10).norms)
    rep = zn0_experiment(Z, 0.5 * S, S, 1, 20)
    assert [v for _, v in rep.norms] == pytest.approx([1 - 2.0**-n for n in range(1, 21)], abs=1e-12)
    assert rep.holds


def test_zn0_premises():
    S = depolarizing(QUBIT, 0.4)
    with pytest.raises(PremiseViolated):
        zn0_experiment(I2, S, 0.5 * S, 1, 5)
    with pytest.raises(PremiseViolated):
        zn0_experiment(I2, SuperOperator.zero(QUBIT), S, 1, 5)
    with pytest.raises(PremiseViolated):
        zn0_experiment(I2, S - 0.5 * S, S, 1, 5)
    with pytest.raises(InvalidInput):
        zn0_experiment(I2, 0.5 * S, S, 3, 2)


# --- end to end ----------------------------------------------------------------


def test_theorem12_direct_route_single_map():
    T = depolarizing(QUBIT, 0.3)
    res = theorem12_experiment(None, T, 0.5 * power(T, 2), 1, 1, eps=1.9, horizon=8)
    assert res.hypothesis_norms == pytest.approx((0.5, 0.5), abs=1e-12)
    assert res.trace.ell_eps == 3
    assert res.trace.d_method == "direct"
    assert res.trace.M_power == res.trace.d_eps
    assert res.trace.n0 == MultiIndex(2 * 3 * res.trace.d_eps)
    assert abs(res.zq_norm - res.zq_norm_dual) <= 1e-9
    assert res.holds
    assert all(e.upper < 1.9 for _, e in res.report.samples)


def test_theorem12_swap_premise_fails():
    T = swap_conjugation()
    for S in (0.5 * T, 0.5 * I2, SuperOperator.zero(QUBIT)):
        with pytest.raises(PremiseViolated):
            theorem12_experiment(None, T, S, 1, 1, eps=0.5)


def test_theorem12_rejects_non_unital():
    T = depolarizing(QUBIT, 0.3)
    with pytest.raises(PremiseViolated):
        theorem12_experiment(None, 0.9 * T, 0.5 * T, 1, 1, eps=0.5)


def test_corollary14_reductions():
    T = depolarizing(QUBIT, 0.3)
    res = corollary14_experiment(T, I2, 1, 1, eps=1.9, table_size=5)
    single = difference_norm_sequence(T, 1, range(5))
    for (n, est) in res.table.samples:
        assert est.lower == pytest.approx(single.samples[n[0]][1].lower, abs=1e-9)
    assert res.theorem12.holds
    res0 = corollary14_experiment(T, schur(QUBIT, [[1, 0.5], [0.5, 1]]), 1, 0, eps=1.9, table_size=4)
    assert all(e.upper == 0 for _, e in res0.table.samples)


# --- classical meet criterion ----------------------------------------------------


def test_meet_and_zaharopol_examples():
    I3 = stochastic(np.eye(3))
    assert meet_classical(I3, I3).max_abs_diff(I3) == 0
    rep = zaharopol_check(I3, m=1, N=5)
    assert rep.condition_ii == 0 and rep.decay.values() == [0.0] * 6

    cycle = stochastic([[0.0, 1.0], [1.0, 0.0]])
    assert np.all(meet_classical(power(cycle, 2), cycle).matrix == 0)
    rep = zaharopol_check(cycle, m=1, N=10)
    assert rep.condition_ii == pytest.approx(1) and rep.condition_i == pytest.approx(2)
    assert all(abs(v - 2) <= 1e-12 for v in rep.decay.values())
    assert rep.implication_holds

    a = np.full((3, 3), 0.1) + np.diag([0.7, 0.0, 0.0]) + np.array([[0, 0, 0.7], [0, 0.7, 0], [0, 0, 0]])
    assert np.allclose(a.sum(axis=0), 1) and a.min() == pytest.approx(0.1)
    rep = zaharopol_check(stochastic(a), m=1, N=64)
    assert rep.condition_ii <= 1 - 3 * 0.1 + 1e-12
    assert rep.decay_verified and rep.implication_holds


def test_meet_requires_classical_algebra():
    with pytest.raises(InvalidInput):
        meet_classical(I2, I2)
    with pytest.raises(InvalidInput):
        zaharopol_check(depolarizing(QUBIT, 0.5))


def test_meet_is_entrywise_minimum_with_weights():
    w = [1.0, 4.0]
    A = stochastic([[0.2, 0.5], [0.8, 0.5]], w)
    B = stochastic([[0.6, 0.1], [0.4, 0.9]], w)
    meet = meet_classical(A, B)
    masses = np.minimum([[0.2, 0.5], [0.8, 0.5]], [[0.6, 0.1], [0.4, 0.9]])
    assert meet.max_abs_diff(stochastic(masses, w)) <= 1e-15
    assert norm_positive(meet) <= 1
