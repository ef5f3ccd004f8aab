import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ost import _kernels
from ost.game_core import (
    EQ_TOLERANCE,
    MixedStrategy,
    SupportSizeError,
    build_utility_matrix,
    equilibrium_gaps,
    expected_loss,
    expected_utility,
    plan_efficacy,
    plan_expected_loss,
    plan_financial_cost,
    solution_record,
    solve_maximin,
    support_enumeration,
)
from ost.scenario import LevelSpec, SafeguardSpec, Scenario, UserGroup, Weights

MATCHING_PENNIES = np.array([[-1.0, 1.0], [1.0, -1.0]])


def matrices(max_rows=4, max_cols=3, low=-400.0, high=0.0):
    return st.integers(1, max_rows).flatmap(
        lambda m: st.integers(1, max_cols).flatmap(
            lambda n: arrays(np.float64, (m, n),
                             elements=st.floats(low, high, allow_nan=False))))


# --- expected_loss -----------------------------------------------------------

def test_expected_loss_table_value(scenario):
    # 17.6 "Medium (Videos)" on administration: 0.8 * 25 * (1 - 0.6)
    assert expected_loss(scenario, "17.6", 2, "admin") == pytest.approx(8.0, abs=1e-12)


def test_expected_loss_level_zero_is_unmitigated(scenario):
    assert expected_loss(scenario, "17.4", 0, "ict") == 20.0
    assert expected_loss(scenario, "17.6", 0, "ict") == 20.0


def test_expected_loss_near_total_efficacy():
    group = UserGroup(id="g", name="G", asset_value=100.0, attack_probability=1.0, size=1)
    sg = SafeguardSpec(id="s", name="S", levels=(
        LevelSpec(1, "only", {"g": 0.99}, {"g": 0.0}, 0.0),))
    s = Scenario(groups=(group,), safeguards=(sg,), weights=Weights(), budget=0.0)
    assert expected_loss(s, "s", 1, "g") == pytest.approx(1.0, abs=1e-12)


def test_expected_loss_unknown_ids(scenario):
    with pytest.raises(KeyError):
        expected_loss(scenario, "nope", 1, "ict")
    with pytest.raises(KeyError):
        expected_loss(scenario, "17.4", 1, "nobody")
    with pytest.raises(KeyError):
        expected_loss(scenario, "17.4", 9, "ict")


# --- build_utility_matrix ----------------------------------------------------

def test_utility_matrix_hand_values(scenario):
    m = build_utility_matrix(scenario, "17.4", 3)
    assert m.values.shape == (4, 3)
    assert m.group_ids == ("ict", "clinical", "admin")
    # Low/ICT: -(0.2*100*0.65 + 1); High/Clinical: -(0.5*50*0.3 + 360)
    assert m.values[1, 0] == pytest.approx(-14.0, abs=1e-12)
    assert m.values[3, 1] == pytest.approx(-367.5, abs=1e-9)


def test_utility_matrix_level_zero_row(scenario):
    for sid in ("17.4", "17.6"):
        m = build_utility_matrix(scenario, sid, 0)
        np.testing.assert_allclose(m.values[0], [-20.0, -25.0, -20.0], atol=1e-12)


def test_utility_matrix_weights(scenario):
    weighted = dataclasses.replace(scenario, weights=Weights(0.5, 0.25))
    m = build_utility_matrix(weighted, "17.4", 1)
    # -(0.5 * 13) - (0.25 * 1) for Low/ICT
    assert m.values[1, 0] == pytest.approx(-6.75, abs=1e-12)
    np.testing.assert_allclose(m.values[0], [-10.0, -12.5, -10.0], atol=1e-12)


def test_utility_matrix_lambda_out_of_range(scenario):
    with pytest.raises(ValueError, match="level cap"):
        build_utility_matrix(scenario, "17.4", 4)


def test_all_entries_non_positive_under_unit_weights(scenario):
    for sid in ("17.4", "17.6"):
        m = build_utility_matrix(scenario, sid, 3)
        assert m.values.max() <= 0.0


# --- expected_utility --------------------------------------------------------

def test_expected_utility_point_masses(scenario):
    m = build_utility_matrix(scenario, "17.4", 2)
    d = MixedStrategy.point_mass("defender", 1, 3)
    a = MixedStrategy.point_mass("attacker", 2, 3)
    assert expected_utility(m, d, a) == m.values[1, 2]


def test_expected_utility_uniform_symmetry():
    u = np.array([0.5, 0.5])
    assert expected_utility(MATCHING_PENNIES, u, u) == pytest.approx(0.0, abs=1e-15)


def test_expected_utility_mixed_rows(scenario):
    m = build_utility_matrix(scenario, "17.4", 2)
    d = np.array([0.0, 0.2, 0.8])
    for i in range(3):
        a = MixedStrategy.point_mass("attacker", i, 3)
        expected = 0.2 * m.values[1, i] + 0.8 * m.values[2, i]
        assert expected_utility(m, d, a) == pytest.approx(expected, abs=1e-12)


def test_expected_utility_dimension_mismatch(scenario):
    m = build_utility_matrix(scenario, "17.4", 2)
    with pytest.raises(ValueError, match="weights"):
        expected_utility(m, np.array([0.5, 0.5]), np.array([1.0, 0.0, 0.0]))


# --- mixed strategies --------------------------------------------------------

def test_mixed_strategy_validation():
    with pytest.raises(ValueError, match="sum"):
        MixedStrategy("defender", np.array([0.5, 0.4]))
    with pytest.raises(ValueError, match="negative"):
        MixedStrategy("defender", np.array([1.5, -0.5]))
    assert MixedStrategy("defender", np.array([0.0, 0.3, 0.7])).support() == (1, 2)


def test_mixed_strategy_is_frozen():
    strategy = MixedStrategy("attacker", np.array([0.25, 0.75]))
    with pytest.raises(ValueError):
        strategy.probabilities[0] = 1.0


# --- solve_maximin -----------------------------------------------------------

def test_solve_matching_pennies():
    sol = solve_maximin(MATCHING_PENNIES)
    np.testing.assert_allclose(sol.nsp.probabilities, [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(sol.attacker_strategy.probabilities, [0.5, 0.5], atol=1e-12)
    assert sol.value == pytest.approx(0.0, abs=1e-12)


def test_solve_level_zero_game(scenario):
    sol = solve_maximin(build_utility_matrix(scenario, "17.4", 0))
    assert tuple(sol.nsp.probabilities) == (1.0,)
    # attacker targets the clinical group: largest asset_value * attack_probability
    assert tuple(sol.attacker_strategy.probabilities) == (0.0, 1.0, 0.0)
    assert sol.value == -25.0


def test_solve_single_column():
    sol = solve_maximin(np.array([[-3.0], [-1.0], [-2.0]]))
    assert sol.value == pytest.approx(-1.0, abs=1e-12)
    assert sol.nsp.support() == (1,)


def test_solver_matches_oracle_on_use_case(scenario):
    m = build_utility_matrix(scenario, "17.4", 2)
    assert solve_maximin(m).value == pytest.approx(support_enumeration(m).value, abs=1e-9)


def test_solver_saddle_point_on_use_case(scenario):
    for sid in ("17.4", "17.6"):
        for lam in range(4):
            m = build_utility_matrix(scenario, sid, lam)
            sol = solve_maximin(m)
            attacker_gap, defender_gap = equilibrium_gaps(m, sol.nsp, sol.attacker_strategy)
            assert attacker_gap <= EQ_TOLERANCE
            assert defender_gap <= EQ_TOLERANCE
            assert sol.value <= 0.0


def test_solver_is_deterministic():
    rng = np.random.default_rng(11)
    u = rng.uniform(-400, 0, size=(4, 3))
    first = solve_maximin(u)
    second = solve_maximin(u)
    assert np.array_equal(first.nsp.probabilities, second.nsp.probabilities)
    assert first.value == second.value


# --- support_enumeration -----------------------------------------------------

def test_oracle_matching_pennies():
    sol = support_enumeration(MATCHING_PENNIES)
    np.testing.assert_allclose(sol.nsp.probabilities, [0.5, 0.5], atol=1e-12)
    assert sol.value == pytest.approx(0.0, abs=1e-12)


def test_oracle_single_row_returns_row_minimum():
    sol = support_enumeration(np.array([[-4.0, -9.0, -1.0]]))
    assert sol.value == -9.0
    assert sol.attacker_strategy.support() == (1,)


def test_oracle_agrees_with_lp_on_random_matrices():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        u = rng.uniform(-400.0, 0.0, size=(4, 3))
        assert support_enumeration(u).value == pytest.approx(
            solve_maximin(u).value, abs=1e-9)


def test_oracle_size_limit():
    with pytest.raises(SupportSizeError):
        support_enumeration(np.zeros((9, 4)))


# --- properties --------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(matrices())
def test_property_saddle_point_and_value_agreement(u):
    sol = solve_maximin(u)
    attacker_gap, defender_gap = equilibrium_gaps(u, sol.nsp, sol.attacker_strategy)
    assert attacker_gap <= EQ_TOLERANCE
    assert defender_gap <= EQ_TOLERANCE
    assert sol.value <= EQ_TOLERANCE  # non-positive entries keep the value non-positive
    oracle = support_enumeration(u)
    assert abs(sol.value - oracle.value) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(matrices(low=-50.0, high=0.0), st.floats(0.1, 8.0))
def test_property_scale_equivariance(u, c):
    base = solve_maximin(u)
    scaled = solve_maximin(c * u)
    assert scaled.value == pytest.approx(c * base.value, abs=1e-9 * max(1.0, c))
    assert scaled.nsp.support() == base.nsp.support()


@settings(max_examples=40, deadline=None)
@given(matrices(max_rows=3, low=-100.0, high=0.0),
       arrays(np.float64, (3,), elements=st.floats(-100.0, 0.0, allow_nan=False)))
def test_property_extra_level_never_hurts(u, extra_row):
    grown = np.vstack([u, extra_row[: u.shape[1]]])
    assert solve_maximin(grown).value >= solve_maximin(u).value - 1e-9


@settings(max_examples=40, deadline=None)
@given(matrices(max_cols=2, low=-100.0, high=0.0),
       arrays(np.float64, (4,), elements=st.floats(-100.0, 0.0, allow_nan=False)))
def test_property_extra_group_never_helps(u, extra_col):
    grown = np.hstack([u, extra_col[: u.shape[0]].reshape(-1, 1)])
    assert solve_maximin(grown).value <= solve_maximin(u).value + 1e-9


# --- game families -----------------------------------------------------------

def test_family_shape_and_level_zero(scenario, families):
    fam = families[0]
    assert fam.safeguard_id == "17.4"
    assert len(fam.solutions) == 4
    assert tuple(fam.solution(0).nsp.probabilities) == (1.0,)
    for lam, sol in enumerate(fam.solutions):
        assert sol.max_level == lam
        assert sol.nsp.probabilities.size == lam + 1


def test_family_values_non_decreasing(families):
    for fam in families:
        values = [sol.value for sol in fam.solutions]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


# --- plan metrics ------------------------------------------------------------

def test_plan_efficacy_point_mass(scenario):
    plan = MixedStrategy.point_mass("defender", 2, 3)
    assert plan_efficacy(scenario, "17.4", plan, "ict") == 0.6


def test_plan_efficacy_mixture(scenario):
    assert plan_efficacy(scenario, "17.4", np.array([0.0, 0.2, 0.8]), "ict") == pytest.approx(0.55, abs=1e-12)


def test_plan_efficacy_level_zero(scenario):
    assert plan_efficacy(scenario, "17.4", np.array([1.0, 0.0, 0.0]), "ict") == 0.0


def test_plan_expected_loss(scenario):
    assert plan_expected_loss(scenario, "17.4", np.array([1.0]), "ict") == 20.0
    assert plan_expected_loss(scenario, "17.4", np.array([0.0, 0.2, 0.8]), "ict") == pytest.approx(9.0, abs=1e-12)
    assert plan_expected_loss(scenario, "17.6", np.array([0.0, 1.0]), "clinical") == pytest.approx(20.0, abs=1e-12)


def test_plan_expected_loss_matches_pure_level(scenario):
    for sid in ("17.4", "17.6"):
        for level in range(4):
            plan = MixedStrategy.point_mass("defender", level, 4)
            for gid in scenario.group_ids:
                assert plan_expected_loss(scenario, sid, plan, gid) == expected_loss(scenario, sid, level, gid)


def test_plan_financial_cost(scenario):
    assert plan_financial_cost(scenario, "17.4", np.array([1.0])) == 0.0
    assert plan_financial_cost(scenario, "17.4", np.array([0.0, 0.2, 0.8])) == pytest.approx(18.0, abs=1e-12)
    assert plan_financial_cost(scenario, "17.4", np.array([0.0, 1.0])) == 10.0


def test_plan_dimension_mismatch(scenario):
    with pytest.raises(ValueError, match="levels"):
        plan_financial_cost(scenario, "17.4", np.array([0.1, 0.1, 0.1, 0.1, 0.6]))


def test_solution_record_round_trips_saddle(scenario):
    m = build_utility_matrix(scenario, "17.6", 3)
    record = solution_record(scenario, solve_maximin(m))
    attacker_gap, defender_gap = equilibrium_gaps(
        m, np.array(record["nsp"]), np.array(record["attacker"]))
    assert attacker_gap <= EQ_TOLERANCE and defender_gap <= EQ_TOLERANCE
    assert record["plan_cost"] == plan_financial_cost(scenario, "17.6", np.array(record["nsp"]))


# --- backend parity ----------------------------------------------------------

def test_backends_are_bit_identical():
    if _kernels.ACTIVE_BACKEND != "numba":
        pytest.skip("numba backend not active")
    rng = np.random.default_rng(77)
    for _ in range(25):
        m = rng.uniform(0.5, 400.0, size=(rng.integers(1, 5), rng.integers(1, 4)))
        jit_result = _kernels.simplex_game(m, 1e-12, 10_000)
        py_result = _kernels._simplex_game_py(m, 1e-12, 10_000)
        assert jit_result[0] == py_result[0]
        assert jit_result[1] == py_result[1]
        assert np.array_equal(jit_result[2], py_result[2])
        assert np.array_equal(jit_result[3], py_result[3])
