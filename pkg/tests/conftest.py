import json
from pathlib import Path

import numpy as np
import pytest

import hzreach as hr
from hzreach.network import FeedforwardNetwork, load_network
from hzreach.reach import ClosedLoopSystem, LinearPlant

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hz(rng, n=2, n_g=4, n_b=3, n_c=2, feasible=True, scale=1.0):
    """Random hybrid zonotope; with ``feasible`` the rhs is consistent with a
    known factor point, otherwise it is random (often empty)."""
    gc = rng.normal(size=(n, n_g)) * scale
    gb = rng.normal(size=(n, n_b)) * scale
    ac = rng.normal(size=(n_c, n_g))
    ab = rng.normal(size=(n_c, n_b))
    if feasible:
        xi_c = rng.uniform(-0.9, 0.9, size=n_g)
        xi_b = rng.choice([-1.0, 1.0], size=n_b)
        rhs = ac @ xi_c + ab @ xi_b
    else:
        rhs = rng.normal(size=n_c) * 2.0
    center = rng.normal(size=n)
    return hr.make_hz(center, gc, gb, ac if n_c else None,
                      ab if n_c else None, rhs if n_c else None)


@pytest.fixture
def unit_square():
    return hr.from_box([-1.0, -1.0], [1.0, 1.0])


def tiny_negation_net():
    """pi(x) = relu(-x) - relu(x) = -x exactly on scalars."""
    return FeedforwardNetwork((np.array([[-1.0], [1.0]]), np.array([[1.0, -1.0]])),
                              (np.zeros(2), np.zeros(1)))


def tiny_half_negation_net():
    """pi(x) = -x/2 exactly on scalars."""
    return FeedforwardNetwork((np.array([[-1.0], [1.0]]), np.array([[0.5, -0.5]])),
                              (np.zeros(2), np.zeros(1)))


def random_net(rng, n_in, widths, n_out, weight_scale=1.0, bias_scale=0.3):
    dims = [n_in] + list(widths) + [n_out]
    ws, bs = [], []
    for a, b in zip(dims[:-1], dims[1:]):
        ws.append(rng.normal(size=(b, a)) * (weight_scale / np.sqrt(a)))
        bs.append(rng.normal(size=b) * bias_scale)
    return FeedforwardNetwork(tuple(ws), tuple(bs))


@pytest.fixture(scope="session")
def di_plant():
    return LinearPlant([[1.0, 1.0], [0.0, 1.0]], [[0.5], [1.0]])


@pytest.fixture(scope="session")
def di_controller():
    return load_network(FIXTURES / "di_controller_10_5.json")


@pytest.fixture(scope="session")
def di_system(di_plant, di_controller):
    return ClosedLoopSystem(di_plant, di_controller,
                            hr.from_box([-8.0, -8.0], [8.0, 8.0]))


def write_di_scenario(tmp_path, **overrides):
    """Write a small double-integrator scenario + controller to tmp_path."""
    controller = json.loads((FIXTURES / "di_controller_10_5.json").read_text())
    (tmp_path / "controller.json").write_text(json.dumps(controller))
    scenario = {
        "name": "di-test",
        "plant": {"A": [[1.0, 1.0], [0.0, 1.0]], "B": [[0.5], [1.0]]},
        "controller": "controller.json",
        "state_set": {"box": {"lower": [-8.0, -8.0], "upper": [8.0, 8.0]}},
        "target": {"box": {"lower": [-1.0, -1.0], "upper": [1.0, 1.0]}},
        "initial_set": {"box": {"lower": [-3.0, 0.5], "upper": [-2.0, 1.5]}},
        "horizon": 3,
        "seed": 0,
    }
    scenario.update(overrides)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario))
    return path
