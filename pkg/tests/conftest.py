"""Shared fixtures: the bundled 9-bus case and small hand-built networks."""

from __future__ import annotations

import numpy as np
import pytest

import opfsens as ops
from opfsens.network import assemble_network


@pytest.fixture(scope="session")
def case9_text() -> str:
    with open(ops.bundled_case_path(), "r", encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="session")
def case9(case9_text):
    return ops.parse_matpower(case9_text)


@pytest.fixture(scope="session")
def net9(case9):
    net, _ = ops.build_network(case9)
    return net


@pytest.fixture(scope="session")
def params9(case9):
    _, params = ops.build_network(case9)
    return params


@pytest.fixture(scope="session")
def loads9(case9, net9):
    return ops.nominal_loads(case9, net9)


@pytest.fixture(scope="session")
def two_bus():
    """One generator, one load, one line; ample limits."""
    net = assemble_network([1], [2], [(1, 2, 10.0)])
    params = ops.OpfParams(
        cost=np.array([1.0]),
        gen_upper=np.array([10.0]),
        gen_lower=np.array([0.0]),
        flow_upper=np.array([10.0]),
        flow_lower=np.array([-10.0]),
    )
    return net, params


@pytest.fixture(scope="session")
def chain18(net9, params9):
    """Two 9-bus copies tied by one bridge: 7 (copy 0) -> 4 (copy 1)."""
    return ops.build_chain(net9, params9, 2, [ops.TieLine(0, 7, 1, 4)])


@pytest.fixture(scope="session")
def chain27(net9, params9):
    """The bundled 3-copy reconstruction of the 27-bus example."""
    copies, ties = ops.load_chain_config(ops.bundled_chain_config_path())
    return ops.build_chain(net9, params9, copies, ties)


# Published worst-case table for the 9-bus network (generator x load).
TABLE_9BUS = np.array([
    [1.0000, 1.3935, 2.0650, 2.4748, 1.9389, 1.3244],
    [2.4236, 2.9560, 1.7024, 1.4748, 1.0000, 2.0081],
    [2.5162, 1.9838, 1.0000, 1.3847, 1.6595, 3.0081],
])

# Published worst-case table for the chained 27-bus network,
# generators 1..3 of the first copy x loads 4''..9'' of the last copy.
TABLE_27BUS = np.array([
    [7.3155, 10.1942, 15.1069, 18.1045, 14.1843, 9.6889],
    [4.3595, 6.0750, 9.0026, 10.7889, 8.4528, 5.7739],
    [4.0933, 5.7040, 8.4528, 10.1301, 7.9366, 5.4213],
])


@pytest.fixture(scope="session")
def table9():
    return TABLE_9BUS


@pytest.fixture(scope="session")
def table27():
    return TABLE_27BUS


def random_regular_params(params, rng):
    """Random cost vector in a range that keeps case9 draws regular."""
    return ops.OpfParams(
        cost=rng.uniform(0.5, 5.0, params.cost.shape[0]),
        gen_upper=params.gen_upper,
        gen_lower=params.gen_lower,
        flow_upper=params.flow_upper,
        flow_lower=params.flow_lower,
    )
