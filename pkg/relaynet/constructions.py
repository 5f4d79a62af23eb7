"""Networks on which the best single route achieves exactly the guaranteed fraction of C-bar.

Every generator returns the network together with the minimum cut and the
best-route value it was designed for. Both are stored, never recomputed, so
:func:`verify_tight_example` is a genuine cross-check against exhaustive search.
"""
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from relaynet.cutset import Cut, approx_capacity, cut_value, validate_cut
from relaynet.network_model import (
    CapacityBits,
    LayerStructure,
    Network,
    network_from_document,
    network_to_document,
)
from relaynet.routing import Path, best_route, enumerate_paths, path_capacity
from utils.error_handler import ValidationError, VerificationError, logger
from utils.validation_constants import (
    CAPACITY_ATOL,
    DESIGNED_KEYS,
    MAX_EXHAUSTIVE_RELAYS,
    MAX_PATH_ENUM_RELAYS,
    TIGHT_FAMILIES,
)


@dataclass(frozen=True)
class TightExample:
    network: Network
    designed_capacity_bits: CapacityBits
    designed_cut: Cut
    designed_route_bound_bits: CapacityBits
    family: str
    degenerate: bool = False

    @property
    def fraction(self) -> float:
        return self.designed_route_bound_bits / self.designed_capacity_bits


@dataclass(frozen=True)
class TightExampleReport:
    approx_capacity_bits: float
    min_cut: Cut
    designed_cut_bits: float
    max_path_bits: float
    best_route_bits: float
    route: Path


def _require_positive(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be a finite number > 0, got {value!r}")
    return float(value)


def _require_count(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ValidationError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def construct_general_tight(num_relays: int, weak_bits: CapacityBits) -> TightExample:
    """Any-topology example where the best route gets C-bar / (floor(N/2) + 1).

    Relay 1 sits on a weak S->1 link, relays 2..N_f+1 hang off S and feed
    relays N_f+2..2N_f+1 over weak links, which reach D; every other link is
    N^2 times stronger. Even N adds relay N with a strong S->N and a weak N->D.
    """
    n = _require_count(num_relays, "N")
    a = _require_positive(weak_bits, "A")
    strong = n * n * a
    half = (n - 1) // 2
    left = range(2, half + 2)

    links: Dict[Tuple[int, int], float] = {(0, 1): a, (1, n + 1): strong}
    for i in left:
        links[(0, i)] = strong
        links[(i, i + half)] = a
        links[(i + half, n + 1)] = strong
    cut_nodes = [0, *left]
    if n % 2 == 0:
        links[(0, n)] = strong
        links[(n, n + 1)] = a
        cut_nodes.append(n)

    degenerate = n <= 2
    if degenerate:
        logger.warning(f"General construction with N={n} has no relay pairs; using the S->1->D chain")
    return TightExample(
        network=Network.from_link_capacities(n, links),
        designed_capacity_bits=a * (n // 2 + 1),
        designed_cut=Cut.from_nodes(cut_nodes),
        designed_route_bound_bits=a,
        family='general-even' if n % 2 == 0 else 'general-odd',
        degenerate=degenerate,
    )


def layered_weak_fraction(num_layers: int, relays_per_layer: int) -> Fraction:
    """Weak-link factor f: 2/((L-1)N_L + 4) for odd L, 2/(L N_L + 2) for even L."""
    if num_layers % 2:
        return Fraction(2, (num_layers - 1) * relays_per_layer + 4)
    return Fraction(2, num_layers * relays_per_layer + 2)


def _layered_links(layering, strong, weak):
    L, n_l = layering.num_layers, layering.relays_per_layer
    destination = layering.num_relays + 1
    links = {}

    # local relay index i in [1, N_L] of layer l is node (l-1)*N_L + i
    def node(layer, i):
        return (layer - 1) * n_l + i

    for i in range(1, n_l + 1):
        links[(0, node(1, i))] = strong if i < n_l else weak

    for layer in range(1, L):
        for i in range(1, n_l + 1):
            for j in range(1, n_l + 1):
                if layer % 2:
                    if i == n_l or j == n_l:
                        bits = strong
                    else:
                        bits = weak if i == j else 0.0
                else:
                    bits = weak if i == j == n_l else strong
                if bits:
                    links[(node(layer, i), node(layer + 1, j))] = bits

    for i in range(1, n_l + 1):
        if L % 2:
            bits = strong if i == n_l else (weak if i == 1 else 0.0)
        else:
            bits = strong if i < n_l else weak
        if bits:
            links[(node(L, i), destination)] = bits
    return links


def construct_layered_tight(num_layers: int, relays_per_layer: int, strong_bits: CapacityBits) -> TightExample:
    """Layered example where the best route gets exactly f * C-bar.

    Strong links carry W bits and weak links f*W. The designed cut holds the
    source, relays 1..N_L-1 of every odd layer and relay N_L of every even
    layer; all its crossing links are weak and pairwise orthogonal, so its
    value is W, while moving any node across adds a strong link.
    """
    L = _require_count(num_layers, "L")
    n_l = _require_count(relays_per_layer, "N_L")
    w = _require_positive(strong_bits, "W")
    layering = LayerStructure(L, n_l)
    family = 'layered-odd' if L % 2 else 'layered-even'

    if n_l == 1:
        logger.warning(f"Layered construction with N_L=1 is a {L}-relay line; every link gets W")
        nodes = list(range(L + 2))
        links = {(i, i + 1): w for i in nodes[:-1]}
        return TightExample(Network.from_link_capacities(L, links, layering),
                            w, Cut.from_nodes([0]), w, family, degenerate=True)

    f = layered_weak_fraction(L, n_l)
    weak = float(f) * w
    cut_nodes = [0]
    for layer in range(1, L + 1):
        members = layering.layer_nodes(layer)
        cut_nodes.extend(members[:-1] if layer % 2 else members[-1:])
    return TightExample(
        network=Network.from_link_capacities(layering.num_relays, _layered_links(layering, w, weak), layering),
        designed_capacity_bits=w,
        designed_cut=Cut.from_nodes(cut_nodes),
        designed_route_bound_bits=weak,
        family=family,
    )


def verify_tight_example(ex: TightExample, max_relays: int = MAX_EXHAUSTIVE_RELAYS,
                         workers: int = 1) -> TightExampleReport:
    """Re-derive C-bar, the designed cut value and the best route by exhaustive search.

    Raises VerificationError naming every claim that does not hold.
    """
    net = ex.network
    logger.info(f"Starting verification of {ex.family} example with {net.num_relays} relays")
    failures: List[str] = []

    capacity, min_cut = approx_capacity(net, max_relays=max_relays, workers=workers)
    if abs(capacity - ex.designed_capacity_bits) > CAPACITY_ATOL:
        failures.append(f"approx_capacity: computed {capacity:.12g} bits, designed {ex.designed_capacity_bits:.12g}")

    try:
        validate_cut(net, ex.designed_cut)
        designed_cut_bits = cut_value(net, ex.designed_cut)
    except ValidationError as e:
        failures.append(f"designed_cut: {e}")
        designed_cut_bits = math.nan
    else:
        if abs(designed_cut_bits - ex.designed_capacity_bits) > CAPACITY_ATOL \
                or abs(designed_cut_bits - capacity) > CAPACITY_ATOL:
            failures.append(f"designed_cut: value {designed_cut_bits:.12g} bits, designed "
                            f"{ex.designed_capacity_bits:.12g}, minimum over cuts {capacity:.12g}")

    route, route_bits = best_route(net)
    if net.num_relays <= MAX_PATH_ENUM_RELAYS:
        max_path_bits = max(path_capacity(net, p) for p in enumerate_paths(net))
    else:
        # widest-path search already gives the maximum over all paths
        max_path_bits = route_bits
    if max_path_bits > ex.designed_route_bound_bits + CAPACITY_ATOL:
        failures.append(f"path_bound: a path carries {max_path_bits:.12g} bits, "
                        f"bound {ex.designed_route_bound_bits:.12g}")
    if abs(route_bits - ex.designed_route_bound_bits) > CAPACITY_ATOL:
        failures.append(f"best_route: route {route} carries {route_bits:.12g} bits, "
                        f"designed {ex.designed_route_bound_bits:.12g}")

    if failures:
        logger.warning(f"Verification of {ex.family} example failed: {len(failures)} claim(s)")
        raise VerificationError(failures)
    logger.info(f"Verified {ex.family} example: C-bar {capacity:.6f} bits, best route {route_bits:.6f} bits")
    return TightExampleReport(capacity, min_cut, designed_cut_bits, max_path_bits, route_bits, route)


def _designed_block(ex):
    return {
        'capacity_bits': ex.designed_capacity_bits,
        'cut': ex.designed_cut.nodes(),
        'route_bound_bits': ex.designed_route_bound_bits,
        'family': ex.family,
        'degenerate': ex.degenerate,
    }


def save_tight_example(ex: TightExample) -> bytes:
    """Network JSON document with the designed values in a "designed" block."""
    doc = network_to_document(ex.network)
    doc['designed'] = _designed_block(ex)
    return json.dumps(doc, indent=2).encode('utf-8')


def _designed_number(block, key):
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValidationError(f"designed.{key} must be a finite number, got {value!r}")
    return float(value)


def load_tight_example(data: Union[bytes, str]) -> TightExample:
    try:
        if isinstance(data, bytes):
            data = data.decode('utf-8')
        doc = json.loads(data)
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ValidationError(f"malformed network document: {e}") from e
    block: Optional[dict] = doc.get('designed') if isinstance(doc, dict) else None
    if block is None:
        raise ValidationError("network document has no 'designed' block")
    if not isinstance(block, dict) or set(block) != DESIGNED_KEYS:
        raise ValidationError(f"designed block needs exactly the keys {sorted(DESIGNED_KEYS)}")
    if block['family'] not in TIGHT_FAMILIES:
        raise ValidationError(f"designed.family must be one of {sorted(TIGHT_FAMILIES)}, got {block['family']!r}")
    if not isinstance(block['degenerate'], bool):
        raise ValidationError("designed.degenerate must be true or false")
    cut = block['cut']
    if not isinstance(cut, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in cut):
        raise ValidationError("designed.cut must be a list of node indices")

    net = network_from_document(doc)
    return TightExample(
        network=net,
        designed_capacity_bits=_designed_number(block, 'capacity_bits'),
        designed_cut=Cut.from_nodes(cut),
        designed_route_bound_bits=_designed_number(block, 'route_bound_bits'),
        family=block['family'],
        degenerate=block['degenerate'],
    )
