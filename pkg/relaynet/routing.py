"""Routes through a relay network: path capacity, the best (widest) route and
the guaranteed fraction of C-bar that the best route achieves.
"""
import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, NamedTuple, Optional, Tuple

import networkx as nx

from relaynet.cutset import Cut, approx_capacity, t_max
from relaynet.network_model import CapacityBits, Network, link_capacity, link_capacity_matrix
from utils.error_handler import CapExceededError, DisconnectedNetworkError, IndexRangeError, ValidationError, logger
from utils.validation_constants import CAPACITY_ATOL, MAX_EXHAUSTIVE_RELAYS, MAX_PATH_ENUM_RELAYS


@dataclass(frozen=True, order=True)
class Path:
    """Non-repeating node sequence from the source (0) to the destination (N+1)."""

    nodes: Tuple[int, ...]

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    def __str__(self):
        return " -> ".join(str(v) for v in self.nodes)


class Guarantee(NamedTuple):
    fraction: Fraction
    gap_bits: float


@dataclass(frozen=True)
class GuaranteeReport:
    best_route_bits: float
    approx_capacity_bits: float
    fraction: float
    additive_gap_bits: float
    satisfied: bool
    theorem: str
    route: Path
    min_cut: Cut

    @property
    def bound_bits(self) -> float:
        return self.fraction * self.approx_capacity_bits - self.additive_gap_bits

    @property
    def fraction_achieved(self) -> float:
        if self.approx_capacity_bits > 0:
            return self.best_route_bits / self.approx_capacity_bits
        return math.nan


def validate_path(net: Network, path: Path) -> None:
    nodes = path.nodes
    if len(nodes) < 2 or nodes[0] != net.source or nodes[-1] != net.destination:
        raise ValidationError(f"path {list(nodes)} must run from node 0 to node {net.destination}")
    if len(set(nodes)) != len(nodes):
        raise ValidationError(f"path {list(nodes)} repeats a node")
    for v in nodes[1:-1]:
        if not 1 <= v <= net.num_relays:
            raise IndexRangeError(f"path {list(nodes)}: interior node {v} is not a relay")
    for i, j in zip(nodes, nodes[1:]):
        if net.gains[i, j] == 0:
            raise ValidationError(f"path {list(nodes)}: hop {i}->{j} has zero gain")


def path_capacity(net: Network, path: Path) -> CapacityBits:
    """Bottleneck link capacity (decode-and-forward rate of the line network)."""
    validate_path(net, path)
    return min(link_capacity(net, i, j) for i, j in zip(path.nodes, path.nodes[1:]))


def link_graph(net: Network) -> nx.DiGraph:
    """Directed graph of nonzero-gain links with a 'capacity' attribute in bits."""
    capacities = link_capacity_matrix(net)
    graph = nx.DiGraph()
    graph.add_nodes_from(range(net.num_nodes))
    for i in range(net.num_nodes):
        for j in range(net.num_nodes):
            if net.gains[i, j] != 0:
                graph.add_edge(i, j, capacity=float(capacities[i, j]))
    return graph


def _widest_bottleneck(graph: nx.DiGraph, source: int) -> dict:
    bottleneck = {node: -1.0 for node in graph.nodes}
    bottleneck[source] = math.inf
    heap = [(-math.inf, source)]
    while heap:
        neg_width, u = heapq.heappop(heap)
        width = -neg_width
        if width < bottleneck[u]:
            continue
        for v in graph.successors(u):
            candidate = min(width, graph[u][v]['capacity'])
            if candidate > bottleneck[v]:
                bottleneck[v] = candidate
                heapq.heappush(heap, (-candidate, v))
    return bottleneck


def best_route(net: Network) -> Tuple[Path, CapacityBits]:
    """Max-bottleneck route; ties go to fewer hops, then the smallest node sequence."""
    graph = link_graph(net)
    source, destination = net.source, net.destination
    if not nx.has_path(graph, source, destination):
        raise DisconnectedNetworkError(f"no path from node {source} to node {destination} through nonzero links")
    width = _widest_bottleneck(graph, source)[destination]

    wide = nx.DiGraph()
    wide.add_nodes_from(graph.nodes)
    wide.add_edges_from((u, v) for u, v, c in graph.edges(data='capacity') if c >= width)
    hops_to_destination = nx.single_source_shortest_path_length(wide.reverse(copy=False), destination)

    nodes = [source]
    while nodes[-1] != destination:
        u = nodes[-1]
        nodes.append(min(v for v in wide.successors(u)
                         if hops_to_destination.get(v) == hops_to_destination[u] - 1))
    return Path(tuple(nodes)), float(width)


def enumerate_paths(net: Network, max_hops: Optional[int] = None,
                    max_relays: int = MAX_PATH_ENUM_RELAYS) -> List[Path]:
    """Every simple source-to-destination path through nonzero links, sorted."""
    if net.num_relays > max_relays:
        raise CapExceededError(f"path enumeration is capped at {max_relays} relays, network has {net.num_relays}")
    graph = link_graph(net)
    paths = nx.all_simple_paths(graph, net.source, net.destination, cutoff=max_hops)
    return sorted(Path(tuple(p)) for p in paths)


def route_certificate_cut(net: Network) -> Cut:
    """Nodes reachable from the source over links strictly wider than the best route.

    No such link reaches the destination, so this is a cut whose crossing links
    are all at most as wide as the best route.
    """
    _, width = best_route(net)
    graph = link_graph(net)
    strong = nx.DiGraph()
    strong.add_nodes_from(graph.nodes)
    strong.add_edges_from((u, v) for u, v, c in graph.edges(data='capacity') if c > width)
    return Cut.from_nodes({net.source} | nx.descendants(strong, net.source))


def thm1_guarantee(num_relays: int) -> Guarantee:
    """Fraction 1/(floor(N/2)+1) with additive gap 2 log2((N+2)/2), any N-relay network."""
    if num_relays < 1:
        raise ValidationError(f"N must be >= 1, got {num_relays}")
    return Guarantee(Fraction(1, num_relays // 2 + 1), 2 * math.log2((num_relays + 2) / 2))


def thm2_guarantee(num_layers: int, relays_per_layer: int) -> Guarantee:
    """Fraction 1/T_max(L, N_L) with additive gap 2 log2(N_L), layered networks."""
    return Guarantee(1 / t_max(num_layers, relays_per_layer), 2 * math.log2(relays_per_layer))


def compare_guarantees(num_layers: int, relays_per_layer: int) -> Tuple[Guarantee, Guarantee]:
    """The general and the layered guarantee for the same layered network size."""
    return (thm1_guarantee(num_layers * relays_per_layer),
            thm2_guarantee(num_layers, relays_per_layer))


def check_route_guarantee(net: Network, max_relays: int = MAX_EXHAUSTIVE_RELAYS,
                          workers: int = 1) -> GuaranteeReport:
    """Best route versus the guarantee that applies to this network."""
    route, route_bits = best_route(net)
    capacity, cut = approx_capacity(net, max_relays=max_relays, workers=workers)
    if net.layering is not None:
        theorem = 'thm2'
        guarantee = thm2_guarantee(net.layering.num_layers, net.layering.relays_per_layer)
    else:
        theorem = 'thm1'
        guarantee = thm1_guarantee(net.num_relays)
    fraction = float(guarantee.fraction)
    satisfied = route_bits >= fraction * capacity - guarantee.gap_bits - CAPACITY_ATOL
    if not satisfied:
        logger.warning(f"Route guarantee violated: route {route_bits:.6f} bits, C-bar {capacity:.6f} bits")
    return GuaranteeReport(
        best_route_bits=route_bits,
        approx_capacity_bits=capacity,
        fraction=fraction,
        additive_gap_bits=guarantee.gap_bits,
        satisfied=satisfied,
        theorem=theorem,
        route=route,
        min_cut=cut,
    )
