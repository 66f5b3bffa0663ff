import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relu_landscape.critical import assemble_system, loss_at_critical, solve_critical
from relu_landscape.dataset import Dataset, generate_gaussian_dataset
from relu_landscape.genuineness import draw_hidden_weights
from relu_landscape import _rng
from relu_landscape.network import (DimensionError, NetworkWeights, activated_fraction, activation_pattern,
                                    effective_weights, loss_gradients, patterned_loss, relu_loss)


def one_sample():
    return Dataset(np.array([[1.0, 1.0]]), np.array([1.0]))


def test_pattern_sign_and_boundary():
    data = one_sample()
    assert activation_pattern(NetworkWeights([[1.0, -0.5]], [1.0]), data).tolist() == [[1]]
    assert activation_pattern(NetworkWeights([[1.0, -1.0]], [1.0]), data).tolist() == [[0]]


def test_dead_pattern_at_large_negative_bias():
    data = generate_gaussian_dataset(3, 200, 0)
    w = draw_hidden_weights(_rng.stream(0, 0, "w"), 10, 3, -20.0)
    assert not activation_pattern(NetworkWeights.with_unit_output(w), data).any()


def test_effective_weights():
    w = np.array([[1.0, 2.0], [3.0, -4.0]])
    assert np.array_equal(effective_weights(NetworkWeights(w, [1.0, 1.0])), w)
    assert np.array_equal(effective_weights(NetworkWeights(w, [0.0, 0.0])), np.zeros((2, 2)))
    assert np.array_equal(effective_weights(NetworkWeights(w, [2.0, -1.0])), [[2.0, 4.0], [-3.0, 4.0]])


def test_loss_examples():
    data = generate_gaussian_dataset(2, 20, 1)
    dead = NetworkWeights(np.tile([0.0, 0.0, -1.0], (3, 1)), np.ones(3))
    assert relu_loss(dead, data) == 1.0
    exact = NetworkWeights([[1.0, 0.0]], [1.0])
    assert relu_loss(exact, one_sample()) == 0.0
    gw, gz = loss_gradients(exact, one_sample())
    assert not gw.any() and not gz.any()
    gw, gz = loss_gradients(dead, data)
    assert not gw.any() and not gz.any()


def test_patterned_loss_all_zero_pattern():
    data = generate_gaussian_dataset(2, 10, 0)
    assert patterned_loss(np.ones((2, 3)), np.zeros((20, 2)), data) == 1.0


def test_patterned_loss_at_critical_point():
    data = generate_gaussian_dataset(2, 30, 4)
    w = draw_hidden_weights(_rng.stream(4, 0, "w"), 3, 2, 0.0)
    pattern = activation_pattern(NetworkWeights.with_unit_output(w), data)
    system = assemble_system(pattern, data)
    sol = solve_critical(system)
    assert abs(patterned_loss(sol.R0, pattern, data) - loss_at_critical(system, sol)) <= 1e-8


def test_activated_fraction_extremes():
    assert activated_fraction(np.zeros((4, 3))) == 0.0
    assert activated_fraction(np.ones((4, 3))) == 1.0


def test_activated_fraction_near_half_at_zero_bias():
    data = generate_gaussian_dataset(3, 1000, 0)
    fr = [activated_fraction(activation_pattern(
        NetworkWeights.with_unit_output(draw_hidden_weights(_rng.stream(s, 0, "w"), 10, 3, 0.0)), data))
        for s in range(20)]
    assert abs(np.mean(fr) - 0.5) <= 0.05


def test_dimension_errors():
    data = generate_gaussian_dataset(2, 5, 0)
    with pytest.raises(DimensionError):
        relu_loss(NetworkWeights(np.ones((2, 4)), np.ones(2)), data)
    with pytest.raises(DimensionError):
        NetworkWeights(np.ones((2, 3)), np.ones(3))


instances = st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(2, 15), st.integers(0, 2**31 - 1))


@settings(max_examples=50, deadline=None)
@given(instances)
def test_relu_loss_equals_patterned_loss(inst):
    d, K, N, seed = inst
    rng = np.random.default_rng(seed)
    data = Dataset.from_raw(rng.normal(size=(N, d)), rng.choice([-1.0, 1.0], N))
    weights = NetworkWeights(rng.normal(size=(K, d + 1)), rng.normal(size=K))
    pattern = activation_pattern(weights, data)
    assert abs(relu_loss(weights, data) - patterned_loss(effective_weights(weights), pattern, data)) <= 1e-12 * (
        1 + relu_loss(weights, data))


@settings(max_examples=50, deadline=None)
@given(instances, st.floats(0.01, 100.0))
def test_positive_rescaling_invariance(inst, alpha):
    d, K, N, seed = inst
    rng = np.random.default_rng(seed)
    data = Dataset.from_raw(rng.normal(size=(N, d)), rng.choice([-1.0, 1.0], N))
    w, z = rng.normal(size=(K, d + 1)), rng.normal(size=K)
    a = relu_loss(NetworkWeights(w, z), data)
    b = relu_loss(NetworkWeights(w / alpha, z * alpha), data)
    assert abs(a - b) <= 1e-10 * (1 + a)
