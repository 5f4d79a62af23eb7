"""Cuts, cut values and the approximate capacity C-bar of a relay network.

A cut is a node set containing the source and not the destination. Its value is
the i.i.d.-input MIMO capacity from the cut to its complement; C-bar is the
minimum value over all 2^N cuts. Relay k maps to bit k-1 of a cut's bitmask.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, Iterable, Iterator, List, Tuple

import numpy as np

from relaynet.linalg_core import mimo_capacity, mimo_capacity_batch
from relaynet.network_model import CapacityBits, LayerStructure, Network, link_capacity_matrix
from utils.error_handler import CapExceededError, LayeringRequiredError, ValidationError, logger
from utils.helpers import mask_matrix
from utils.validation_constants import CUT_CHUNK_SIZE, MAX_EXHAUSTIVE_RELAYS


@dataclass(frozen=True)
class Cut:
    """Source-side node set Omega."""

    members: FrozenSet[int]

    @classmethod
    def from_nodes(cls, nodes: Iterable[int]) -> 'Cut':
        return cls(frozenset(int(v) for v in nodes))

    @classmethod
    def from_bitmask(cls, mask: int, num_relays: int) -> 'Cut':
        return cls(frozenset([0] + [k + 1 for k in range(num_relays) if (mask >> k) & 1]))

    @property
    def bitmask(self) -> int:
        return sum(1 << (v - 1) for v in self.members if v > 0)

    def nodes(self) -> List[int]:
        return sorted(self.members)

    def complement(self, num_relays: int) -> List[int]:
        return [v for v in range(num_relays + 2) if v not in self.members]


@dataclass(frozen=True)
class LayeredCutView:
    """Omega split by layer: parts[l] = Omega_l for l in [0, L+1]."""

    parts: Tuple[Tuple[int, ...], ...]
    complement_sizes: Tuple[int, ...]


@dataclass(frozen=True)
class LayeredCutValue:
    stages: Tuple[float, ...]
    total: float


def validate_cut(net: Network, cut: Cut) -> None:
    if 0 not in cut.members:
        raise ValidationError("cut must contain the source (node 0)")
    if net.destination in cut.members:
        raise ValidationError(f"cut must not contain the destination (node {net.destination})")
    stray = [v for v in cut.members if not 0 <= v <= net.destination]
    if stray:
        raise ValidationError(f"cut nodes {sorted(stray)} outside [0, {net.destination}]")


def cut_matrix(net: Network, cut: Cut) -> np.ndarray:
    """H_Omega: rows are the receivers in Omega^c, columns the transmitters in Omega."""
    validate_cut(net, cut)
    return net.gains[np.ix_(cut.nodes(), cut.complement(net.num_relays))].T


def cut_value(net: Network, cut: Cut) -> CapacityBits:
    return mimo_capacity(cut_matrix(net, cut))


def enumerate_cuts(num_relays: int) -> Iterator[Cut]:
    for mask in range(1 << num_relays):
        yield Cut.from_bitmask(mask, num_relays)


def _check_cap(num_relays, max_relays):
    if num_relays > max_relays:
        raise CapExceededError(
            f"exhaustive cut enumeration over 2^{num_relays} cuts exceeds the cap of "
            f"{max_relays} relays (raise max_relays / --max-relays to override)")


def _chunk_values(received_by, num_relays, start, stop):
    # Zeroing the rows/columns outside the cut leaves det(I + M M^H) unchanged.
    relay_bits = mask_matrix(np.arange(start, stop), num_relays)
    count = stop - start
    in_cut = np.hstack([np.ones((count, 1), bool), relay_bits, np.zeros((count, 1), bool)])
    masked = received_by[None, :, :] * (~in_cut)[:, :, None] * in_cut[:, None, :]
    return mimo_capacity_batch(masked)


def cut_values(net: Network, max_relays: int = MAX_EXHAUSTIVE_RELAYS, workers: int = 1,
               chunk_size: int = CUT_CHUNK_SIZE) -> np.ndarray:
    """Values of all 2^N cuts, indexed by bitmask."""
    _check_cap(net.num_relays, max_relays)
    total = 1 << net.num_relays
    received_by = np.asarray(net.gains).T
    ranges = [(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda r: _chunk_values(received_by, net.num_relays, *r), ranges))
    else:
        parts = [_chunk_values(received_by, net.num_relays, *r) for r in ranges]
    return np.concatenate(parts)


def approx_capacity(net: Network, max_relays: int = MAX_EXHAUSTIVE_RELAYS,
                    workers: int = 1) -> Tuple[CapacityBits, Cut]:
    """Exact minimum cut value and the minimizing cut with the smallest bitmask."""
    values = cut_values(net, max_relays=max_relays, workers=workers)
    best = int(np.argmin(values))
    logger.debug(f"Evaluated {values.size} cuts of a {net.num_relays}-relay network")
    return float(values[best]), Cut.from_bitmask(best, net.num_relays)


def _require_layering(net: Network) -> LayerStructure:
    if net.layering is None:
        raise LayeringRequiredError("operation needs a layered network")
    return net.layering


def _layered_view(layering: LayerStructure, cut: Cut) -> LayeredCutView:
    levels = range(layering.num_layers + 2)
    parts = tuple(tuple(v for v in layering.layer_nodes(l) if v in cut.members) for l in levels)
    complement_sizes = tuple(
        len(layering.layer_nodes(l + 1)) - len(parts[l + 1]) for l in range(layering.num_layers + 1))
    return LayeredCutView(parts, complement_sizes)


def layered_view(net: Network, cut: Cut) -> LayeredCutView:
    layering = _require_layering(net)
    validate_cut(net, cut)
    return _layered_view(layering, cut)


def layered_cut_value(net: Network, cut: Cut) -> LayeredCutValue:
    """Per-stage capacities from Omega_l to Omega_{l+1}^c; they sum to cut_value."""
    view = layered_view(net, cut)
    layering = net.layering
    stages = []
    for l in range(layering.num_layers + 1):
        senders = list(view.parts[l])
        receivers = [v for v in layering.layer_nodes(l + 1) if v not in cut.members]
        if not senders or not receivers:
            stages.append(0.0)
            continue
        stages.append(mimo_capacity(net.gains[np.ix_(senders, receivers)].T))
    return LayeredCutValue(tuple(stages), float(sum(stages)))


def _max_crossing_capacity(net: Network, cut: Cut) -> float:
    capacities = link_capacity_matrix(net)[np.ix_(cut.nodes(), cut.complement(net.num_relays))]
    return float(capacities.max())


def cut_upper_bound_general(net: Network, cut: Cut) -> CapacityBits:
    """min(|W|,|W^c|) * max crossing R + min(|W|,|W^c|) * log2(|W| |W^c|)"""
    validate_cut(net, cut)
    inside = len(cut.members)
    outside = net.num_nodes - inside
    smaller = min(inside, outside)
    return smaller * _max_crossing_capacity(net, cut) + smaller * math.log2(inside * outside)


def _t_for_view(view):
    return sum(min(len(part), size) for part, size in zip(view.parts, view.complement_sizes))


def t_of_cut(net: Network, cut: Cut) -> int:
    """T(Omega) = sum_l min(|Omega_l|, |Omega_{l+1}^c|)"""
    return _t_for_view(layered_view(net, cut))


def cut_upper_bound_layered(net: Network, cut: Cut) -> CapacityBits:
    """T(Omega) * (max crossing R + 2 log2 N_L)"""
    layering = _require_layering(net)
    return t_of_cut(net, cut) * (_max_crossing_capacity(net, cut) + 2 * math.log2(layering.relays_per_layer))


def t_max(num_layers: int, relays_per_layer: int) -> Fraction:
    """Closed-form upper bound on T(Omega) over all cuts of a layered network."""
    if num_layers < 1 or relays_per_layer < 1:
        raise ValidationError(f"need L >= 1 and N_L >= 1, got L={num_layers}, N_L={relays_per_layer}")
    if num_layers % 2:
        return Fraction((num_layers - 1) * relays_per_layer + 4, 2)
    return Fraction(num_layers * relays_per_layer + 2, 2)


def max_t_of_cut(num_layers: int, relays_per_layer: int,
                 max_relays: int = MAX_EXHAUSTIVE_RELAYS) -> Tuple[int, Cut]:
    """Largest T(Omega) over every cut, with the first cut (bitmask order) attaining it."""
    layering = LayerStructure(num_layers, relays_per_layer)
    _check_cap(layering.num_relays, max_relays)
    best, best_cut = -1, None
    for cut in enumerate_cuts(layering.num_relays):
        value = _t_for_view(_layered_view(layering, cut))
        if value > best:
            best, best_cut = value, cut
    return best, best_cut
