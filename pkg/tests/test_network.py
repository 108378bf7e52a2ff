import numpy as np
import pytest

import hzreach as hr
from hzreach.errors import DimensionMismatchError, EnclosureError
from hzreach.network import (
    FeedforwardNetwork,
    SaturationBounds,
    activation_graph,
    auto_interval,
    fnn_graph,
    interleave_permutation,
    network_from_dict,
    network_to_dict,
    preactivation_bounds,
    relu_graph_hz,
    saturate_network,
)

from conftest import random_net, tiny_negation_net


def test_relu_graph_matrices_exact():
    for alpha, beta in [(1.0, 1.0), (2.5, 0.75), (100.0, 400.0)]:
        h = relu_graph_hz(alpha, beta)
        a, b = alpha, beta
        assert np.array_equal(h.gen_cont, [[a / 2, b / 2, 0, 0, 0, 0],
                                           [0, b / 2, 0, 0, 0, 0]])
        assert np.array_equal(h.gen_bin, [[-(a + b) / 4], [-b / 4]])
        assert np.array_equal(h.center, [(b - a) / 4, b / 4])
        assert np.array_equal(h.con_cont, [[1, 0, 1, 0, 0, 0],
                                           [-1, 0, 0, 1, 0, 0],
                                           [0, 1, 0, 0, 1, 0],
                                           [0, -1, 0, 0, 0, 1]])
        assert np.array_equal(h.con_bin, [[0.5], [0.5], [-0.5], [-0.5]])
        assert np.array_equal(h.con_rhs, [0.5, 0.5, 0.5, 0.5])
        assert h.counts() == (6, 1, 4)


def test_relu_graph_membership_samples():
    h = relu_graph_hz(1.0, 1.0)
    for z, member in [(-0.7, True), (0.4, True), (0.0, True), (1.0, True), (-1.0, True)]:
        assert hr.contains_point(h, [z, max(z, 0.0)]) == member
    assert not hr.contains_point(h, [0.4, 0.1])
    assert not hr.contains_point(h, [-0.5, -0.5])
    assert not hr.contains_point(h, [1.2, 1.2])


def test_relu_graph_rejects_nonpositive_scalars():
    with pytest.raises(ValueError):
        relu_graph_hz(0.0, 1.0)
    with pytest.raises(ValueError):
        relu_graph_hz(1.0, -2.0)


def test_interleave_permutation_property():
    for width in (1, 2, 5):
        p = interleave_permutation(width)
        assert np.array_equal(p.sum(axis=0), np.ones(2 * width))
        assert np.array_equal(p.sum(axis=1), np.ones(2 * width))
        assert np.array_equal(p @ p.T, np.eye(2 * width))
        interleaved = np.arange(2 * width, dtype=float)
        blocked = p @ interleaved
        assert np.array_equal(blocked[:width], interleaved[0::2])
        assert np.array_equal(blocked[width:], interleaved[1::2])


def test_activation_graph_scalar_matches_cell(rng):
    domain = hr.from_box([-1.0], [1.0])
    graph = activation_graph(domain, 1.0, 1.0)
    for _ in range(50):
        z = rng.uniform(-1, 1)
        assert hr.contains_point(graph, [z, max(z, 0.0)])
        assert not hr.contains_point(graph, [z, max(z, 0.0) + 0.05])


def test_activation_graph_pair_example():
    domain = hr.from_box([-1.0, -1.0], [1.0, 1.0])
    graph = activation_graph(domain, 1.0, 1.0)
    assert graph.counts() == (14, 2, 10)
    assert hr.contains_point(graph, [-0.5, 0.7, 0.0, 0.7])
    assert not hr.contains_point(graph, [-0.5, 0.7, 0.1, 0.7])


def test_activation_graph_enclosure_error():
    domain = hr.from_box([-2.0, -2.0], [2.0, 2.0])
    with pytest.raises(EnclosureError) as err:
        activation_graph(domain, 1.0, 1.0)
    assert err.value.coordinate in (0, 1)
    assert err.value.excess == pytest.approx(1.0)


def test_fnn_graph_affine_only(rng):
    w = np.array([[1.0, -2.0], [0.5, 0.5]])
    v = np.array([0.1, -0.2])
    net = FeedforwardNetwork((w,), (v,))
    domain = hr.from_box([-1, -1], [1, 1])
    graph, outset = fnn_graph(net, domain)
    assert graph.counts() == domain.counts()  # no hidden neurons
    for _ in range(100):
        x = rng.uniform(-1, 1, 2)
        assert hr.contains_point(graph, np.concatenate([x, w @ x + v]))
        assert hr.contains_point(outset, w @ x + v)
    assert not hr.contains_point(graph, [0.0, 0.0, 0.1 + 0.05, -0.2])


def test_fnn_graph_toy_exactness(rng):
    net = FeedforwardNetwork(
        (np.eye(2), np.array([[1.0, -1.0]])),
        (np.zeros(2), np.array([0.3])))
    domain = hr.from_box([-1, -1], [1, 1])
    graph, outset = fnn_graph(net, domain)
    assert graph.counts() == (2 + 12, 2, 10)
    for _ in range(200):
        x = rng.uniform(-1, 1, 2)
        u = net.evaluate(x)
        assert hr.contains_point(graph, np.concatenate([x, u]))
        assert not hr.contains_point(graph, np.concatenate([x, u + 0.05]))
        assert hr.contains_point(outset, u)


def test_fnn_graph_complexity_formula():
    net = random_net(np.random.default_rng(5), 2, [12], 2)
    domain = hr.from_box([-1, -1], [1, 1])
    graph, outset = fnn_graph(net, domain)
    assert graph.counts() == (2 + 72, 12, 60)
    assert outset.counts() == graph.counts()
    assert graph.dim == 4


def test_fnn_graph_domain_generators_lead(rng):
    net = random_net(rng, 2, [3], 1)
    domain = hr.from_box([-1, -1], [1, 1])
    graph, _ = fnn_graph(net, domain)
    assert np.array_equal(graph.gen_cont[:2, :2], domain.gen_cont)
    assert np.allclose(graph.gen_cont[:2, 2:], 0.0)


def test_fnn_graph_dimension_mismatch(rng):
    net = random_net(rng, 3, [2], 1)
    with pytest.raises(DimensionMismatchError):
        fnn_graph(net, hr.from_box([-1, -1], [1, 1]))


def test_fnn_graph_enclosure_override_error(rng):
    net = random_net(rng, 2, [4, 4], 1, weight_scale=2.0)
    domain = hr.from_box([-5, -5], [5, 5])
    with pytest.raises(EnclosureError) as err:
        fnn_graph(net, domain, 1.0, 1.0)
    assert err.value.layer is not None


def test_auto_interval_covers_preactivations(rng):
    net = random_net(rng, 2, [5, 4], 2)
    domain = hr.from_box([-2, -2], [2, 2])
    alpha, beta = auto_interval(net, domain)
    for box in preactivation_bounds(net, hr.interval_enclosure(domain)):
        assert np.all(box.lower >= -alpha) and np.all(box.upper <= beta)
    graph, _ = fnn_graph(net, domain)  # no enclosure error with auto sizing
    assert graph.dim == 4


def test_saturate_network_scalar_identity():
    ident = FeedforwardNetwork((np.array([[1.0]]),), (np.zeros(1),))
    sat = saturate_network(ident, SaturationBounds([-1.0], [1.0]))
    assert sat.n_layers == 3
    for v, want in [(0.5, 0.5), (3.0, 1.0), (-7.0, -1.0)]:
        assert sat.evaluate([v])[0] == pytest.approx(want, abs=1e-12)


def test_saturate_network_layer_matrices(rng):
    net = random_net(rng, 2, [4], 2)
    bounds = SaturationBounds([-1.0, -2.0], [1.5, 0.5])
    sat = saturate_network(net, bounds)
    assert np.array_equal(sat.weights[-3], -net.weights[-1])
    assert np.array_equal(sat.biases[-3], bounds.upper - net.biases[-1])
    assert np.array_equal(sat.weights[-2], -np.eye(2))
    assert np.array_equal(sat.biases[-2], bounds.upper - bounds.lower)
    assert np.array_equal(sat.weights[-1], np.eye(2))
    assert np.array_equal(sat.biases[-1], bounds.lower)
    assert sat.n_hidden == net.n_hidden + 2 * 2


def test_saturate_network_equals_clamp(rng):
    net = random_net(rng, 2, [6, 3], 2)
    bounds = SaturationBounds([-0.5, -1.0], [0.75, 0.25])
    sat = saturate_network(net, bounds)
    for _ in range(500):
        x = rng.uniform(-3, 3, 2)
        want = np.clip(net.evaluate(x), bounds.lower, bounds.upper)
        assert np.max(np.abs(sat.evaluate(x) - want)) <= 1e-12


def test_saturate_inactive_region_agrees(rng):
    net = FeedforwardNetwork((np.array([[0.1, 0.0]]),), (np.zeros(1),))
    sat = saturate_network(net, SaturationBounds([-1.0], [1.0]))
    for _ in range(50):
        x = rng.uniform(-1, 1, 2)  # outputs in [-0.1, 0.1], never clamped
        assert sat.evaluate(x)[0] == pytest.approx(net.evaluate(x)[0], abs=1e-12)


def test_saturated_graph_is_clamped_graph(rng):
    net = random_net(rng, 1, [3], 1)
    bounds = SaturationBounds([-0.5], [0.5])
    sat = saturate_network(net, bounds)
    domain = hr.from_box([-2.0], [2.0])
    graph, _ = fnn_graph(sat, domain)
    for _ in range(100):
        x = rng.uniform(-2, 2, 1)
        u = np.clip(net.evaluate(x), -0.5, 0.5)
        assert hr.contains_point(graph, np.concatenate([x, u]))
        assert not hr.contains_point(graph, np.concatenate([x, u + 0.02]))


def test_network_validation():
    with pytest.raises(DimensionMismatchError):
        FeedforwardNetwork((np.eye(2), np.eye(3)), (np.zeros(2), np.zeros(3)))
    with pytest.raises(DimensionMismatchError):
        FeedforwardNetwork((np.eye(2),), (np.zeros(3),))
    with pytest.raises(DimensionMismatchError):
        SaturationBounds([0.0], [0.0])


def test_network_json_roundtrip(rng):
    net = random_net(rng, 2, [3], 1)
    net = FeedforwardNetwork(net.weights, net.biases,
                             saturation=SaturationBounds([-1.0], [1.0]))
    back = network_from_dict(network_to_dict(net))
    for w1, w2 in zip(net.weights, back.weights):
        assert np.array_equal(w1, w2)
    assert np.array_equal(back.saturation.lower, [-1.0])
