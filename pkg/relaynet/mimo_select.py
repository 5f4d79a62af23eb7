"""Transmit/receive antenna subset selection for MIMO channels with i.i.d. inputs.

Exhaustive and greedy selection of a k_t x k_r subchannel, plus the lower
bounds that relate the best subchannel to the full channel capacity C:

* general bound: min(k_t,k_r)/min(n_t,n_r) * C - log2(C(n_t,k_t) C(n_r,k_r))
* receive-only selection (n_t <= n_r), two regimes of k_r
* gap-free fraction k_t k_r / (n_t n_r), met step by step by greedy removal
"""
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np

from relaynet.linalg_core import IndexSet, MimoChannel, mimo_capacity, mimo_capacity_batch
from relaynet.network_model import CapacityBits, gain_for_capacity
from utils.error_handler import CapExceededError, ValidationError, logger
from utils.helpers import log2_binomial
from utils.validation_constants import CHANNEL_KEYS, MAX_SUBCHANNEL_COMBINATIONS


@dataclass(frozen=True)
class RemovalStep:
    side: str
    removed_index: int
    antennas_before: int
    capacity_before: float
    capacity_after: float


@dataclass(frozen=True)
class SubchannelSelection:
    tx_indices: IndexSet
    rx_indices: IndexSet
    capacity_bits: CapacityBits
    removal_trace: Tuple[RemovalStep, ...] = ()


class Lemma1Bound(NamedTuple):
    lower: float
    case: str
    upper: Optional[float]


ChannelLike = Union[MimoChannel, np.ndarray]


def _channel(H):
    return H if isinstance(H, MimoChannel) else MimoChannel(H)


def _check_dims(channel, k_t, k_r):
    if not 1 <= k_t <= channel.cols:
        raise ValidationError(f"k_t must lie in [1, {channel.cols}], got {k_t}")
    if not 1 <= k_r <= channel.rows:
        raise ValidationError(f"k_r must lie in [1, {channel.rows}], got {k_r}")


def best_subchannel_bruteforce(H: ChannelLike, k_t: int, k_r: int,
                               max_combinations: int = MAX_SUBCHANNEL_COMBINATIONS) -> SubchannelSelection:
    """Best k_t x k_r subchannel over every antenna subset pair.

    Ties go to the lexicographically smallest (tx, rx) pair.
    """
    channel = _channel(H)
    _check_dims(channel, k_t, k_r)
    count = math.comb(channel.cols, k_t) * math.comb(channel.rows, k_r)
    if count > max_combinations:
        raise CapExceededError(f"{count} subset pairs exceed the cap of {max_combinations}")

    rx_sets = np.array(list(combinations(range(channel.rows), k_r)))
    best_value, best_tx, best_rx = -1.0, None, None
    for tx in combinations(range(channel.cols), k_t):
        stack = channel.matrix[rx_sets[:, :, None], np.array(tx)[None, None, :]]
        values = mimo_capacity_batch(stack)
        i = int(np.argmax(values))
        if values[i] > best_value:
            best_value, best_tx, best_rx = float(values[i]), tx, tuple(int(r) for r in rx_sets[i])
    return SubchannelSelection(tuple(best_tx), best_rx, best_value)


def _drop_rows(matrix, rows, cols, side, keep, current, trace):
    while len(rows) > keep:
        candidates = np.array([rows[:i] + rows[i + 1:] for i in range(len(rows))])
        values = mimo_capacity_batch(matrix[candidates[:, :, None], np.array(cols)[None, None, :]])
        i = int(np.argmax(values))
        trace.append(RemovalStep(side, rows[i], len(rows), current, float(values[i])))
        current = float(values[i])
        rows = rows[:i] + rows[i + 1:]
    return rows, current


def greedy_subchannel(H: ChannelLike, k_t: int, k_r: int) -> SubchannelSelection:
    """Drop one antenna at a time, always the one whose loss hurts least.

    Receive antennas go first; transmit antennas are then dropped as receive
    antennas of the reciprocal channel H^dagger, which has the same capacity.
    """
    channel = _channel(H)
    _check_dims(channel, k_t, k_r)
    trace = []
    current = mimo_capacity(channel)
    rx, current = _drop_rows(channel.matrix, list(range(channel.rows)), list(range(channel.cols)),
                             'rx', k_r, current, trace)
    tx, current = _drop_rows(channel.matrix.conj().T, list(range(channel.cols)), rx,
                             'tx', k_t, current, trace)
    return SubchannelSelection(tuple(tx), tuple(rx), current, tuple(trace))


def check_greedy_trace(selection: SubchannelSelection) -> float:
    """Smallest slack of capacity_after - (m-1)/m * capacity_before over the removals."""
    slacks = [step.capacity_after - (step.antennas_before - 1) / step.antennas_before * step.capacity_before
              for step in selection.removal_trace]
    return min(slacks) if slacks else math.inf


def thm3_lower_bound(capacity: float, n_t: int, n_r: int, k_t: int, k_r: int) -> float:
    """min(k_t,k_r)/min(n_t,n_r) * C - log2(C(n_t,k_t) * C(n_r,k_r)); may be negative."""
    if not (1 <= k_t <= n_t and 1 <= k_r <= n_r):
        raise ValidationError(f"need 1 <= k_t <= n_t and 1 <= k_r <= n_r, got ({k_t},{k_r}) of ({n_t},{n_r})")
    return (min(k_t, k_r) / min(n_t, n_r) * capacity
            - log2_binomial(n_t, k_t) - log2_binomial(n_r, k_r))


def lemma1_bounds(capacity: float, n_t: int, n_r: int, k_r: int) -> Lemma1Bound:
    """Bound on the best n_t x k_r subchannel (all transmitters, k_r receivers).

    Needs n_t <= n_r; for n_t > n_r pass the reciprocal problem (swap n_t and
    n_r, select transmitters as receivers).
    """
    if n_t > n_r:
        raise ValidationError(f"receive selection needs n_t <= n_r, got n_t={n_t} > n_r={n_r}; "
                              "use the reciprocal channel")
    if not 1 <= k_r <= n_r:
        raise ValidationError(f"k_r must lie in [1, {n_r}], got {k_r}")
    if k_r >= n_t:
        lower = capacity - (log2_binomial(n_r, k_r) - log2_binomial(n_r - n_t, k_r - n_t))
        return Lemma1Bound(lower, '5b', capacity)
    lower = k_r / n_t * capacity - (log2_binomial(n_r, k_r) - log2_binomial(n_t, k_r))
    return Lemma1Bound(lower, '5a', None)


def lemma2_fraction(n_t: int, n_r: int, k_t: int, k_r: int) -> Fraction:
    """Gap-free fraction k_t k_r / (n_t n_r)."""
    if not (1 <= k_t <= n_t and 1 <= k_r <= n_r):
        raise ValidationError(f"need 1 <= k_t <= n_t and 1 <= k_r <= n_r, got ({k_t},{k_r}) of ({n_t},{n_r})")
    return Fraction(k_t * k_r, n_t * n_r)


def make_parallel_channel(n: int, per_link_bits: float) -> MimoChannel:
    """n independent links of per_link_bits each (diagonal channel)."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    return MimoChannel(np.eye(n) * gain_for_capacity(per_link_bits))


def make_allones_channel(n_t: int, n_r: int, power: float) -> MimoChannel:
    """All entries sqrt(P); capacity log2(1 + P n_t n_r)."""
    if n_t < 1 or n_r < 1:
        raise ValidationError(f"need n_t, n_r >= 1, got ({n_t}, {n_r})")
    if not math.isfinite(power) or power < 0:
        raise ValidationError(f"power must be a finite number >= 0, got {power!r}")
    return MimoChannel(np.full((n_r, n_t), math.sqrt(power), dtype=np.complex128))


def load_channel(data: Union[bytes, str]) -> MimoChannel:
    """Parse {"rows": n_r, "cols": n_t, "entries": [[re, im], ...]} (row-major)."""
    try:
        if isinstance(data, bytes):
            data = data.decode('utf-8')
        doc = json.loads(data)
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ValidationError(f"malformed channel document: {e}") from e
    if not isinstance(doc, dict) or set(doc) != CHANNEL_KEYS:
        raise ValidationError(f"channel document needs exactly the keys {sorted(CHANNEL_KEYS)}")
    rows, cols, entries = doc['rows'], doc['cols'], doc['entries']
    for name, value in (('rows', rows), ('cols', cols)):
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise ValidationError(f"{name} must be an integer >= 1, got {value!r}")
    if not isinstance(entries, list) or len(entries) != rows * cols:
        raise ValidationError(f"entries must list rows*cols = {rows * cols} [re, im] pairs")
    values = []
    for n, pair in enumerate(entries):
        if not (isinstance(pair, list) and len(pair) == 2
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)):
            raise ValidationError(f"entries[{n}] must be a [re, im] number pair")
        values.append(complex(pair[0], pair[1]))
    return MimoChannel(np.array(values).reshape(rows, cols))


def save_channel(channel: MimoChannel) -> bytes:
    doc = {
        'rows': channel.rows,
        'cols': channel.cols,
        'entries': [[float(z.real), float(z.imag)] for z in channel.matrix.ravel()],
    }
    return json.dumps(doc).encode('utf-8')


def select_subchannel(H: ChannelLike, k_t: int, k_r: int, method: str = 'bruteforce') -> SubchannelSelection:
    """Dispatch on method name ('bruteforce' or 'greedy')."""
    channel = _channel(H)
    logger.info(f"Selecting {k_t}x{k_r} subchannel of a {channel.cols}x{channel.rows} channel ({method})")
    if method == 'bruteforce':
        return best_subchannel_bruteforce(channel, k_t, k_r)
    if method == 'greedy':
        return greedy_subchannel(channel, k_t, k_r)
    raise ValidationError(f"unknown selection method {method!r}")
