import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relu_landscape.critical import Kind, assemble_system, solve_critical
from relu_landscape.dataset import Dataset, generate_gaussian_dataset
from relu_landscape.genuineness import (OrientationPolicy, Status, analyse_cell, build_halfspace_system,
                                        check_continuous, check_isolated, empirical_gap_probability,
                                        genuineness_scan, sign_certificate, violation_matrix)
from relu_landscape.lpfeas import feasibility
from relu_landscape.network import (NetworkWeights, activated_fraction, activation_pattern, effective_weights,
                                    loss_gradients)


def small_data(seed, N=8, d=2):
    rng = np.random.default_rng(seed)
    return Dataset.from_raw(rng.normal(size=(N, d)), rng.choice([-1.0, 1.0], N))


def test_self_consistent_point_is_genuine():
    data = small_data(0)
    R = np.random.default_rng(1).normal(size=(3, 3))
    pattern = activation_pattern(NetworkWeights.with_unit_output(R), data)
    verdict = check_isolated(R, pattern, data)
    assert verdict.status is Status.GENUINE


def test_single_flipped_sample():
    data = small_data(2)
    R = np.random.default_rng(3).normal(size=(2, 3))
    pattern = activation_pattern(NetworkWeights.with_unit_output(R), data).copy()
    on = np.flatnonzero(pattern[:, 0] == 0)[0]
    pattern[on, 0] = 1
    verdict = check_isolated(R, pattern, data, OrientationPolicy("all_positive"))
    assert verdict.status is Status.NOT_GENUINE and verdict.violations == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.01, 100.0))
def test_isolated_verdict_ignores_positive_scale(seed, alpha):
    data = small_data(seed)
    rng = np.random.default_rng(seed)
    R = rng.normal(size=(2, 3))
    pattern = activation_pattern(NetworkWeights.with_unit_output(rng.normal(size=(2, 3))), data)
    assert check_isolated(R, pattern, data).status is check_isolated(alpha * R, pattern, data).status


def test_hand_halfspace_rows():
    data = Dataset.from_raw([[2.0], [-1.0]], [1, -1])
    pattern = np.array([[1], [0]])
    sol = solve_critical(assemble_system(pattern, data))
    system = build_halfspace_system(sol, pattern, data, [1.0])
    assert np.allclose(system.strict_A, [[0.0, 0.0]], atol=1e-12)
    assert np.allclose(system.strict_b, [1.0])
    assert np.allclose(system.nonstrict_A, [[-0.6, 1.2]])
    assert np.allclose(system.nonstrict_b, [-0.2])


def test_dead_pattern_rows_are_trivial():
    data = small_data(4)
    pattern = np.zeros((data.N, 2), dtype=np.int8)
    sol = solve_critical(assemble_system(pattern, data))
    system = build_halfspace_system(sol, pattern, data, [1.0, 1.0])
    # the projector is the identity, so each row is x_i . c <= 0 with zero constant
    assert system.strict_A.shape[0] == 0
    assert not system.nonstrict_b.any()
    assert np.allclose(system.nonstrict_A.reshape(data.N, 2, 6)[:, 0, :3], data.samples)
    assert np.all(system.values(np.zeros(6))[1] <= 0)
    assert check_continuous(sol, pattern, data).status is Status.PLATEAU


def unique_cells(count):
    seed = 0
    while count:
        data = small_data(seed, N=20, d=1)
        rng = np.random.default_rng(seed)
        pattern = activation_pattern(NetworkWeights.with_unit_output(rng.normal(size=(1, 2))), data)
        sol = solve_critical(assemble_system(pattern, data))
        seed += 1
        if sol.kind is Kind.UNIQUE:
            count -= 1
            yield data, pattern, sol


@pytest.mark.parametrize("data, pattern, sol", list(unique_cells(10)))
def test_zero_projector_agrees_with_sign_test(data, pattern, sol):
    for s in ([1.0], [-1.0]):
        system = build_halfspace_system(sol, pattern, data, s)
        assert np.allclose(system.strict_A, 0, atol=1e-10) and np.allclose(system.nonstrict_A, 0, atol=1e-10)
        sign_ok = not violation_matrix(sol.R0, pattern, data, s).any()
        assert feasibility(system).feasible == sign_ok


def genuine_continuous_instance():
    # two neurons sharing the second sample; the family is a line
    data = Dataset.from_raw([[1.0], [-1.0]], [1, 1])
    pattern = np.array([[1, 1], [0, 1]])
    return data, pattern, solve_critical(assemble_system(pattern, data))


def test_feasible_toy_witness():
    data, pattern, sol = genuine_continuous_instance()
    assert sol.kind is Kind.CONTINUOUS
    verdict = check_continuous(sol, pattern, data)
    assert verdict.status is Status.GENUINE
    R = sol.point(verdict.witness).reshape(2, 2)
    assert not violation_matrix(R, pattern, data, verdict.orientation).any()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(3, 10), st.integers(2, 4))
def test_continuous_verdicts_are_sound(seed, N, K):
    data = small_data(seed, N=N, d=2)
    w = np.random.default_rng(seed).normal(size=(K, 3))
    pattern, sol, verdict = analyse_cell(NetworkWeights.with_unit_output(w), data,
                                         OrientationPolicy("exhaustive"))
    # borderline cells may come back inconclusive, which makes no claim
    if verdict.status is Status.GENUINE and sol.kind is Kind.CONTINUOUS:
        R = sol.point(verdict.witness).reshape(K, 3)
        assert not violation_matrix(R, pattern, data, verdict.orientation).any()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(3, 12))
def test_sign_certificate_implies_lp_infeasible(seed, N):
    data = small_data(seed, N=N, d=2)
    rng = np.random.default_rng(seed)
    pattern = activation_pattern(NetworkWeights.with_unit_output(rng.normal(size=(3, 3))), data)
    sol = solve_critical(assemble_system(pattern, data))
    for s in (np.ones(3), -np.ones(3), rng.choice([-1.0, 1.0], 3)):
        if sign_certificate(sol, pattern, data, s) is not None:
            assert not feasibility(build_halfspace_system(sol, pattern, data, s)).feasible


def test_gap_probability_examples():
    data = small_data(6)
    R = np.random.default_rng(7).normal(size=(3, 3))
    weights = NetworkWeights.with_unit_output(R)
    pattern = activation_pattern(weights, data)
    assert empirical_gap_probability(R, weights, pattern, data) == 0.0
    dead = np.zeros_like(pattern)
    assert empirical_gap_probability(np.zeros((3, 3)), weights, dead, data) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_plateau_means_dead_and_flat(seed):
    data = generate_gaussian_dataset(2, 30, seed)
    for bias in (-20.0, 0.0):
        w = np.random.default_rng(seed).normal(size=(3, 3))
        w[:, -1] = bias
        weights = NetworkWeights.with_unit_output(w)
        pattern, _, verdict = analyse_cell(weights, data)
        gw, gz = loss_gradients(weights, data)
        dead = activated_fraction(pattern) == 0
        assert (verdict.status is Status.PLATEAU) == dead
        assert dead == (not gw.any() and not gz.any())


def test_scan_is_deterministic_and_thread_safe():
    data = generate_gaussian_dataset(3, 100, 0)
    a = genuineness_scan(data, 5, [3.0, -3.0], 3, 11)
    b = genuineness_scan(data, 5, [3.0, -3.0], 3, 11)
    c = genuineness_scan(data, 5, [3.0, -3.0], 3, 11, threads=3)
    assert [r.as_dict() for r in a] == [r.as_dict() for r in b] == [r.as_dict() for r in c]


def test_bias_twenty_is_continuous_and_not_genuine():
    data = generate_gaussian_dataset(3, 1000, 0)
    row = genuineness_scan(data, 10, [20.0], 5, 3)[0]
    assert row.continuous_pct == 100.0 and row.genuine_pct == 0.0


def test_policy_parsing():
    assert OrientationPolicy.parse("default").modes == OrientationPolicy().modes
    assert OrientationPolicy.parse("all_negative").modes == ("all_negative",)
    with pytest.raises(ValueError):
        OrientationPolicy.parse("sideways")
    with pytest.raises(ValueError):
        list(OrientationPolicy("exhaustive", max_k=2).sign_vectors(np.ones((3, 2)), np.ones((1, 3)), None))


def test_effective_weight_orientation_from_output_sign():
    data = small_data(8)
    w = np.random.default_rng(9).normal(size=(2, 3))
    weights = NetworkWeights(w, [1.0, -1.0])
    pattern = activation_pattern(weights, data)
    R = effective_weights(weights)
    assert empirical_gap_probability(R, weights, pattern, data) == 0.0
