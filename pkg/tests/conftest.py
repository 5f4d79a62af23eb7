import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from relaynet.network_model import LayerStructure, Network

settings.register_profile("relaynet", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("relaynet")


def complex_normal(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_full_network(num_relays, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    size = num_relays + 2
    gains = complex_normal(rng, (size, size), scale)
    gains[:, 0] = 0
    gains[size - 1, :] = 0
    np.fill_diagonal(gains, 0)
    return Network(num_relays, gains)


def random_layered_network(num_layers, relays_per_layer, seed, scale=1.0):
    layering = LayerStructure(num_layers, relays_per_layer)
    size = layering.num_relays + 2
    layer = np.array([layering.layer_of(v) for v in range(size)])
    allowed = layer[None, :] == layer[:, None] + 1
    gains = complex_normal(np.random.default_rng(seed), (size, size), scale) * allowed
    return Network(layering.num_relays, gains, layering)


@pytest.fixture
def line_network():
    """S -> 1 -> D with 2 and 5 bits."""
    return Network.from_link_capacities(1, {(0, 1): 2.0, (1, 2): 5.0})
