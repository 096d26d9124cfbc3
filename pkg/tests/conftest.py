import numpy as np
import pytest

from nncov.toynet import DatasetSpec, NetSpec, forward_trace, make_dataset
from nncov.trace import ActivationTrace, LayerTrace


@pytest.fixture(scope="session")
def small_net_trace():
    """500-input, 3-layer tanh net; the workhorse for harness tests."""
    net = NetSpec(widths=(16, 12, 8), activations="tanh", weight_seed=7)
    dataset = make_dataset(DatasetSpec(num_inputs=500, dim=8, seed=11))
    return forward_trace(net, dataset)


@pytest.fixture()
def single_neuron_trace():
    """One layer, one neuron, the four inputs of the worked variance example."""
    data = np.array([[10.0], [-10.0], [5.0], [-5.0]])
    return ActivationTrace(layers=(LayerTrace("n", data),))


def two_pass_covariance(rows: np.ndarray) -> np.ndarray:
    """Independent oracle: direct population covariance of a row matrix."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[0] < 2:
        return np.zeros((rows.shape[1], rows.shape[1]))
    centered = rows - rows.mean(axis=0)
    return centered.T @ centered / rows.shape[0]
