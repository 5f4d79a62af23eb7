"""Gaussian full-duplex relay networks: domain types, link capacities and JSON I/O.

Node 0 is the source S, nodes 1..N are relays and node N+1 is the destination D.
``gains[i, j]`` is the complex channel gain from transmitter ``i`` to receiver
``j``. Transmit power is fixed to one; any SNR scaling lives inside the gains
(see :func:`scale_power`). All capacities are in bits (log base 2).
"""
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from utils.error_handler import IndexRangeError, LayeringRequiredError, ValidationError, logger
from utils.helpers import as_complex_matrix, frozen
from utils.validation_constants import (
    CAPACITY_ENTRY_KEYS,
    GAIN_ENTRY_KEYS,
    LAYER_KEYS,
    NETWORK_KEYS,
)

CapacityBits = float

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class LayerStructure:
    """L relay layers of N_L relays each; relay k sits in layer ceil(k / N_L)."""

    num_layers: int
    relays_per_layer: int

    def __post_init__(self):
        for name, value in (('L', self.num_layers), ('N_L', self.relays_per_layer)):
            if not _is_int(value) or value < 1:
                raise ValidationError(f"layers.{name} must be an integer >= 1, got {value!r}")

    @property
    def num_relays(self) -> int:
        return self.num_layers * self.relays_per_layer

    def layer_of(self, node: int) -> int:
        if node == 0:
            return 0
        if node == self.num_relays + 1:
            return self.num_layers + 1
        if 1 <= node <= self.num_relays:
            return (node - 1) // self.relays_per_layer + 1
        raise IndexRangeError(f"node {node} outside [0, {self.num_relays + 1}]")

    def layer_nodes(self, layer: int) -> list:
        if layer == 0:
            return [0]
        if layer == self.num_layers + 1:
            return [self.num_relays + 1]
        if 1 <= layer <= self.num_layers:
            first = (layer - 1) * self.relays_per_layer + 1
            return list(range(first, first + self.relays_per_layer))
        raise IndexRangeError(f"layer {layer} outside [0, {self.num_layers + 1}]")


@dataclass(frozen=True)
class Network:
    """An N-relay network. Immutable: ``gains`` is a read-only array."""

    num_relays: int
    gains: np.ndarray
    layering: Optional[LayerStructure] = None

    def __post_init__(self):
        if not _is_int(self.num_relays) or self.num_relays < 1:
            raise ValidationError(f"num_relays must be an integer >= 1, got {self.num_relays!r}")
        size = self.num_relays + 2
        gains = as_complex_matrix(self.gains, name="gains")
        if gains.shape != (size, size):
            raise ValidationError(f"gains must be {size}x{size}, got {gains.shape[0]}x{gains.shape[1]}")

        diagonal = np.flatnonzero(np.diag(gains))
        if diagonal.size:
            logger.warning(f"Ignoring self-link gains at nodes {diagonal.tolist()}")
            np.fill_diagonal(gains, 0)

        into_source = np.flatnonzero(gains[:, 0])
        if into_source.size:
            raise ValidationError(
                f"gains[{int(into_source[0])}->0]: the source never receives")
        out_of_destination = np.flatnonzero(gains[size - 1, :])
        if out_of_destination.size:
            raise ValidationError(
                f"gains[{size - 1}->{int(out_of_destination[0])}]: the destination never transmits")

        if self.layering is not None:
            if self.layering.num_relays != self.num_relays:
                raise ValidationError(
                    f"layers: L*N_L = {self.layering.num_relays} does not match num_relays = {self.num_relays}")
            layer = np.array([self.layering.layer_of(v) for v in range(size)])
            skip = (gains != 0) & (layer[None, :] != layer[:, None] + 1)
            if skip.any():
                i, j = (int(x) for x in np.argwhere(skip)[0])
                raise ValidationError(
                    f"gains[{i}->{j}]: layered networks only link successive layers "
                    f"(layer {layer[i]} -> layer {layer[j]})")

        object.__setattr__(self, 'gains', frozen(gains))

    @property
    def num_nodes(self) -> int:
        return self.num_relays + 2

    @property
    def source(self) -> int:
        return 0

    @property
    def destination(self) -> int:
        return self.num_relays + 1

    @property
    def is_layered(self) -> bool:
        return self.layering is not None

    def layer_of(self, node: int) -> int:
        return self._layers().layer_of(node)

    def layer_nodes(self, layer: int) -> list:
        return self._layers().layer_nodes(layer)

    def _layers(self) -> LayerStructure:
        if self.layering is None:
            raise LayeringRequiredError("network has no layer structure")
        return self.layering

    @classmethod
    def from_link_capacities(cls, num_relays: int, capacities: Dict[Tuple[int, int], float],
                             layering: Optional[LayerStructure] = None) -> 'Network':
        """Build a network whose link (i, j) has exactly the given capacity in bits."""
        size = num_relays + 2
        gains = np.zeros((size, size), dtype=np.complex128)
        for (i, j), bits in capacities.items():
            _check_pair(num_relays, i, j)
            gains[i, j] = gain_for_capacity(bits)
        return cls(num_relays, gains, layering)


def _is_int(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


def _check_pair(num_relays, i, j):
    last = num_relays + 1
    if not (_is_int(i) and _is_int(j)) or not (0 <= i <= last and 0 <= j <= last):
        raise IndexRangeError(f"link ({i}, {j}) outside nodes [0, {last}]")
    if i == last:
        raise IndexRangeError(f"link ({i}, {j}): the destination never transmits")
    if j == 0:
        raise IndexRangeError(f"link ({i}, {j}): the source never receives")
    if i == j:
        raise IndexRangeError(f"link ({i}, {j}): no self links")


def link_capacity(net: Network, i: int, j: int) -> CapacityBits:
    """R_{i->j} = log2(1 + |h_ij|^2)"""
    _check_pair(net.num_relays, i, j)
    return float(np.log1p(abs(net.gains[i, j]) ** 2) / _LN2)


def link_capacity_matrix(net: Network) -> np.ndarray:
    """All link capacities at once; zero wherever there is no link."""
    return np.log1p(np.abs(net.gains) ** 2) / _LN2


def gain_for_capacity(bits: CapacityBits) -> complex:
    """Real nonnegative gain whose link capacity is ``bits``."""
    if not isinstance(bits, (int, float, np.floating, np.integer)) or isinstance(bits, bool) \
            or not math.isfinite(bits) or bits < 0:
        raise ValidationError(f"link capacity must be a finite number >= 0, got {bits!r}")
    try:
        return complex(math.sqrt(math.expm1(bits * _LN2)), 0.0)
    except OverflowError as e:
        raise ValidationError(f"link capacity {bits!r} bits is too large to represent as a gain") from e


def scale_power(net: Network, power: float) -> Network:
    """Absorb a transmit power (linear SNR) into the gains."""
    if not math.isfinite(power) or power < 0:
        raise ValidationError(f"power must be a finite number >= 0, got {power!r}")
    return Network(net.num_relays, net.gains * math.sqrt(power), net.layering)


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------

def _require_number(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{field} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(f"{field} must be finite, got {value!r}")
    return float(value)


def _require_keys(obj, allowed, required, field):
    if not isinstance(obj, dict):
        raise ValidationError(f"{field} must be an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ValidationError(f"{field}: unknown key(s) {', '.join(unknown)}")
    missing = sorted(required - set(obj))
    if missing:
        raise ValidationError(f"{field}: missing key(s) {', '.join(missing)}")


def network_from_document(doc: dict) -> Network:
    """Validate a decoded network document and build the Network."""
    _require_keys(doc, NETWORK_KEYS, {'num_relays'}, "network")
    num_relays = doc['num_relays']
    if not _is_int(num_relays) or num_relays < 1:
        raise ValidationError(f"num_relays must be an integer >= 1, got {num_relays!r}")

    layering = None
    if 'layers' in doc:
        _require_keys(doc['layers'], LAYER_KEYS, LAYER_KEYS, "layers")
        layering = LayerStructure(doc['layers']['L'], doc['layers']['N_L'])

    if ('gains' in doc) == ('link_capacities' in doc):
        raise ValidationError("network: exactly one of 'gains' or 'link_capacities' is required")
    by_capacity = 'link_capacities' in doc
    field = 'link_capacities' if by_capacity else 'gains'
    entries = doc[field]
    if not isinstance(entries, list):
        raise ValidationError(f"{field} must be an array")

    size = num_relays + 2
    gains = np.zeros((size, size), dtype=np.complex128)
    seen = set()
    for n, entry in enumerate(entries):
        where = f"{field}[{n}]"
        keys = CAPACITY_ENTRY_KEYS if by_capacity else GAIN_ENTRY_KEYS
        _require_keys(entry, keys, keys, where)
        i, j = entry['from'], entry['to']
        if not (_is_int(i) and _is_int(j)) or not (0 <= i < size and 0 <= j < size):
            raise ValidationError(f"{where}: node index outside [0, {size - 1}]")
        if (i, j) in seen:
            raise ValidationError(f"{where}: duplicate link {i}->{j}")
        seen.add((i, j))
        if by_capacity:
            value = gain_for_capacity(_require_number(entry['bits'], f"{where}.bits"))
        else:
            value = complex(_require_number(entry['re'], f"{where}.re"),
                            _require_number(entry['im'], f"{where}.im"))
        if i == j:
            if value != 0:
                logger.warning(f"{where}: self link {i}->{i} ignored")
            continue
        gains[i, j] = value

    return Network(num_relays, gains, layering)


def network_to_document(net: Network) -> dict:
    doc = {'num_relays': int(net.num_relays)}
    if net.layering is not None:
        doc['layers'] = {'L': net.layering.num_layers, 'N_L': net.layering.relays_per_layer}
    doc['gains'] = [
        {'from': int(i), 'to': int(j), 're': float(net.gains[i, j].real), 'im': float(net.gains[i, j].imag)}
        for i, j in np.argwhere(net.gains != 0)
    ]
    return doc


def load_network(data: Union[bytes, str]) -> Network:
    """Parse and validate a UTF-8 network JSON document."""
    try:
        if isinstance(data, bytes):
            data = data.decode('utf-8')
        doc = json.loads(data)
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ValidationError(f"malformed network document: {e}") from e
    return network_from_document(doc)


def save_network(net: Network) -> bytes:
    return json.dumps(network_to_document(net), indent=2).encode('utf-8')


def read_network(path: Union[str, Path]) -> Network:
    net = load_network(Path(path).read_bytes())
    logger.info(f"Loaded {net.num_relays}-relay network from {path}")
    return net


def write_network(net: Network, path: Union[str, Path]) -> None:
    Path(path).write_bytes(save_network(net))
    logger.info(f"Wrote {net.num_relays}-relay network to {path}")
