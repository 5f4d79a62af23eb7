"""Seeded random ensembles and the verification runs built on them.

Every trial is a pure function of (seed, trial): its generator is a Philox
counter-based stream keyed by both, so running trials in parallel or out of
order never changes a record. Results are collected in trial order and can be
emitted as a pandas DataFrame, CSV or JSON.
"""
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from relaynet.cutset import max_t_of_cut, t_max
from relaynet.linalg_core import MimoChannel, mimo_capacity, verify_submatrix_identity
from relaynet.mimo_select import (
    best_subchannel_bruteforce,
    check_greedy_trace,
    greedy_subchannel,
    lemma1_bounds,
    lemma2_fraction,
    thm3_lower_bound,
)
from relaynet.network_model import LayerStructure, Network
from relaynet.routing import check_route_guarantee
from utils.error_handler import CapExceededError, ValidationError, logger
from utils.validation_constants import (
    CAPACITY_ATOL,
    CSV_FLOAT_FORMAT,
    CSV_SCHEMA_VERSION,
    DEFAULT_RAYLEIGH_SCALE,
    MAX_EXHAUSTIVE_RELAYS,
    MAX_MIMO_VERIFY_DIM,
    MAX_SUBSET_ORACLE_DIM,
    MIMO_CSV_COLUMNS,
    PROP1_CSV_COLUMNS,
    PROP2_CSV_COLUMNS,
    VERIFY_CSV_COLUMNS,
)

FADING_MODELS = ('rayleigh', 'fixed_snr')
MIMO_BOUNDS = ('thm3', 'lemma1', 'lemma2')


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial, keyed by the 128-bit value (seed, trial)."""
    if not 0 <= seed < 2**64:
        raise ValidationError(f"seed must lie in [0, 2^64), got {seed}")
    if not 0 <= trial < 2**64:
        raise ValidationError(f"trial index must lie in [0, 2^64), got {trial}")
    return np.random.Generator(np.random.Philox(key=(seed << 64) | trial))


def _complex_gaussian(rng, shape, scale):
    # circularly symmetric with E|h|^2 = scale^2
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Relay network ensembles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleSpec:
    """Random relay networks: full or layered topology, Rayleigh or fixed-SNR fading."""

    num_relays: int
    trials: int
    seed: int
    layering: Optional[LayerStructure] = None
    fading: str = 'rayleigh'
    scale: float = DEFAULT_RAYLEIGH_SCALE
    snr_db: float = 0.0

    def __post_init__(self):
        if self.num_relays < 1:
            raise ValidationError(f"num_relays must be >= 1, got {self.num_relays}")
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must lie in [0, 2^64), got {self.seed}")
        if self.layering is not None and self.layering.num_relays != self.num_relays:
            raise ValidationError(
                f"layered ensemble needs L*N_L = N, got {self.layering.num_layers}*"
                f"{self.layering.relays_per_layer} != {self.num_relays}")
        if self.fading not in FADING_MODELS:
            raise ValidationError(f"fading must be one of {FADING_MODELS}, got {self.fading!r}")
        if not math.isfinite(self.scale) or self.scale < 0:
            raise ValidationError(f"scale must be a finite number >= 0, got {self.scale!r}")
        if not math.isfinite(self.snr_db):
            raise ValidationError(f"snr_db must be finite, got {self.snr_db!r}")

    @property
    def topology(self) -> str:
        return 'full' if self.layering is None else 'layered'

    @classmethod
    def layered(cls, num_layers: int, relays_per_layer: int, **kwargs) -> 'EnsembleSpec':
        layering = LayerStructure(num_layers, relays_per_layer)
        return cls(num_relays=layering.num_relays, layering=layering, **kwargs)


def allowed_links(spec: EnsembleSpec) -> np.ndarray:
    """Boolean (N+2)x(N+2) mask of the links the topology permits."""
    size = spec.num_relays + 2
    if spec.layering is None:
        mask = np.zeros((size, size), dtype=bool)
        mask[:size - 1, 1:] = True
        np.fill_diagonal(mask, False)
        return mask
    layer = np.array([spec.layering.layer_of(v) for v in range(size)])
    return layer[None, :] == layer[:, None] + 1


def random_network(spec: EnsembleSpec, trial: int) -> Network:
    rng = trial_generator(spec.seed, trial)
    size = spec.num_relays + 2
    if spec.fading == 'rayleigh':
        gains = _complex_gaussian(rng, (size, size), spec.scale)
    else:
        modulus = math.sqrt(10.0 ** (spec.snr_db / 10.0))
        gains = modulus * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, (size, size)))
    return Network(spec.num_relays, np.where(allowed_links(spec), gains, 0), spec.layering)


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    approx_capacity_bits: float
    best_route_bits: float
    fraction_achieved: float
    theorem_bound_bits: float
    satisfied: bool

    def as_row(self) -> dict:
        return {
            'trial': self.trial_index,
            'cap_bits': self.approx_capacity_bits,
            'route_bits': self.best_route_bits,
            'fraction': self.fraction_achieved,
            'bound_bits': self.theorem_bound_bits,
            'satisfied': self.satisfied,
        }


def trial_record(net: Network, trial_index: int = 0, max_relays: int = MAX_EXHAUSTIVE_RELAYS) -> TrialRecord:
    """Best route, C-bar and the applicable guarantee for one network."""
    report = check_route_guarantee(net, max_relays=max_relays)
    return TrialRecord(
        trial_index=trial_index,
        approx_capacity_bits=report.approx_capacity_bits,
        best_route_bits=report.best_route_bits,
        fraction_achieved=report.fraction_achieved,
        theorem_bound_bits=report.bound_bits,
        satisfied=report.satisfied,
    )


@dataclass(frozen=True)
class VerifySummary:
    records: Tuple = field(repr=False)
    columns: Tuple[str, ...] = field(repr=False)
    violations: int = 0
    min_fraction: float = math.nan
    mean_fraction: float = math.nan
    worst_slack: float = math.nan

    def rows(self) -> List[dict]:
        return [r.as_row() for r in self.records]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows(), columns=list(self.columns))


def _run_trials(fn, indices, workers):
    if workers > 1 and len(indices) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, indices))
    return [fn(i) for i in indices]


def run_verify(spec: EnsembleSpec, max_relays: int = MAX_EXHAUSTIVE_RELAYS, workers: int = 1) -> VerifySummary:
    """Check the route guarantee on every trial network of the ensemble."""
    if spec.num_relays > max_relays:
        raise CapExceededError(f"ensemble has {spec.num_relays} relays, exhaustive cap is {max_relays}")
    logger.info(f"Starting route verification: {spec.trials} {spec.topology} networks, N={spec.num_relays}")
    records = _run_trials(
        lambda t: trial_record(random_network(spec, t), t, max_relays), range(spec.trials), workers)

    fractions = [r.fraction_achieved for r in records if not math.isnan(r.fraction_achieved)]
    violations = sum(not r.satisfied for r in records)
    if violations:
        logger.warning(f"Route guarantee violated on {violations} of {len(records)} trials")
    logger.info(f"Processed {len(records)} trials with {violations} violations")
    return VerifySummary(
        records=tuple(records),
        columns=tuple(VERIFY_CSV_COLUMNS),
        violations=violations,
        min_fraction=min(fractions) if fractions else math.nan,
        mean_fraction=float(np.mean(fractions)) if fractions else math.nan,
        worst_slack=min(r.best_route_bits - r.theorem_bound_bits for r in records),
    )


# ---------------------------------------------------------------------------
# MIMO subchannel selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MimoRecord:
    trial_index: int
    k_t: int
    k_r: int
    capacity_bits: float
    best_bits: float
    greedy_bits: float
    bound_bits: float
    slack_bits: float
    satisfied: bool

    @property
    def ratio(self) -> float:
        return self.best_bits / self.capacity_bits if self.capacity_bits > 0 else math.nan

    def as_row(self) -> dict:
        return {
            'trial': self.trial_index,
            'kt': self.k_t,
            'kr': self.k_r,
            'cap_bits': self.capacity_bits,
            'best_bits': self.best_bits,
            'greedy_bits': self.greedy_bits,
            'bound_bits': self.bound_bits,
            'satisfied': self.satisfied,
        }


def random_channel(n_t: int, n_r: int, seed: int, trial: int, scale: float = DEFAULT_RAYLEIGH_SCALE) -> MimoChannel:
    """n_r x n_t Rayleigh channel for one trial."""
    return MimoChannel(_complex_gaussian(trial_generator(seed, trial), (n_r, n_t), scale))


def selection_pairs(n_t: int, n_r: int, bound: str) -> List[Tuple[int, int]]:
    """(k_t, k_r) pairs a bound applies to; receive-only selection keeps every
    antenna on the smaller side."""
    pairs = [(k_t, k_r) for k_t in range(1, n_t + 1) for k_r in range(1, n_r + 1)]
    if bound != 'lemma1':
        return pairs
    if n_t <= n_r:
        return [(k_t, k_r) for k_t, k_r in pairs if k_t == n_t]
    return [(k_t, k_r) for k_t, k_r in pairs if k_r == n_r]


def _mimo_records(channel, trial, bound):
    n_t, n_r = channel.cols, channel.rows
    capacity = mimo_capacity(channel)
    records = []
    for k_t, k_r in selection_pairs(n_t, n_r, bound):
        best = best_subchannel_bruteforce(channel, k_t, k_r)
        greedy = greedy_subchannel(channel, k_t, k_r)
        consistent = greedy.capacity_bits <= best.capacity_bits + CAPACITY_ATOL
        if bound == 'thm3':
            bound_bits = thm3_lower_bound(capacity, n_t, n_r, k_t, k_r)
            slack = best.capacity_bits - bound_bits
        elif bound == 'lemma1':
            # n_t > n_r selects transmitters: same bound on the reciprocal channel
            if n_t <= n_r:
                result = lemma1_bounds(capacity, n_t, n_r, k_r)
            else:
                result = lemma1_bounds(capacity, n_r, n_t, k_t)
            bound_bits = result.lower
            slack = best.capacity_bits - bound_bits
            if result.upper is not None:
                slack = min(slack, result.upper - best.capacity_bits)
        else:
            bound_bits = float(lemma2_fraction(n_t, n_r, k_t, k_r)) * capacity
            slack = min(greedy.capacity_bits - bound_bits, check_greedy_trace(greedy))
        records.append(MimoRecord(
            trial_index=trial,
            k_t=k_t,
            k_r=k_r,
            capacity_bits=capacity,
            best_bits=best.capacity_bits,
            greedy_bits=greedy.capacity_bits,
            bound_bits=bound_bits,
            slack_bits=slack,
            satisfied=consistent and slack >= -CAPACITY_ATOL,
        ))
    return records


def run_mimo_verify(n_t: int, n_r: int, trials: int, seed: int, bound: str = 'thm3',
                    channel_source: Optional[Callable[[int], MimoChannel]] = None,
                    workers: int = 1) -> VerifySummary:
    """Brute-force and greedy selection against one of the subchannel lower bounds.

    ``channel_source`` maps a trial index to a channel; by default every trial
    draws an independent Rayleigh channel.
    """
    if bound not in MIMO_BOUNDS:
        raise ValidationError(f"bound must be one of {MIMO_BOUNDS}, got {bound!r}")
    if not (1 <= n_t <= MAX_MIMO_VERIFY_DIM and 1 <= n_r <= MAX_MIMO_VERIFY_DIM):
        raise CapExceededError(f"MIMO verification needs 1 <= n_t, n_r <= {MAX_MIMO_VERIFY_DIM}, got {n_t}x{n_r}")
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    if channel_source is None:
        def channel_source(t):
            return random_channel(n_t, n_r, seed, t)

    def one_trial(t):
        channel = channel_source(t)
        if (channel.cols, channel.rows) != (n_t, n_r):
            raise ValidationError(f"trial {t}: channel is {channel.cols}x{channel.rows}, expected {n_t}x{n_r}")
        return _mimo_records(channel, t, bound)

    logger.info(f"Starting {bound} verification: {trials} channels of {n_t}x{n_r}")
    records = [r for batch in _run_trials(one_trial, range(trials), workers) for r in batch]
    violations = sum(not r.satisfied for r in records)
    if violations:
        logger.warning(f"{bound} violated on {violations} of {len(records)} selections")
    logger.info(f"Processed {len(records)} selections with {violations} violations")
    ratios = [r.ratio for r in records if not math.isnan(r.ratio)]
    return VerifySummary(
        records=tuple(records),
        columns=tuple(MIMO_CSV_COLUMNS),
        violations=violations,
        min_fraction=min(ratios) if ratios else math.nan,
        mean_fraction=float(np.mean(ratios)) if ratios else math.nan,
        worst_slack=min(r.slack_bits for r in records),
    )


# ---------------------------------------------------------------------------
# Layered cut statistics and the principal-submatrix identity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Prop1Record:
    num_layers: int
    relays_per_layer: int
    max_t: int
    t_max: float
    satisfied: bool

    def as_row(self) -> dict:
        return {'L': self.num_layers, 'N_L': self.relays_per_layer, 'max_t': self.max_t,
                't_max': self.t_max, 'satisfied': self.satisfied}


def layer_pairs(max_product: int) -> List[Tuple[int, int]]:
    return [(L, n_l) for L in range(1, max_product + 1) for n_l in range(1, max_product // L + 1)]


def run_prop1(pairs: Iterable[Tuple[int, int]], max_relays: int = MAX_EXHAUSTIVE_RELAYS) -> VerifySummary:
    """Exhaustive max of T over all cuts against its closed-form bound."""
    records = []
    for L, n_l in pairs:
        best, _ = max_t_of_cut(L, n_l, max_relays=max_relays)
        bound = t_max(L, n_l)
        records.append(Prop1Record(L, n_l, best, float(bound), best <= bound))
    violations = sum(not r.satisfied for r in records)
    logger.info(f"Processed {len(records)} layer shapes with {violations} violations")
    return VerifySummary(
        records=tuple(records),
        columns=tuple(PROP1_CSV_COLUMNS),
        violations=violations,
        worst_slack=min((r.t_max - r.max_t for r in records), default=math.nan),
    )


@dataclass(frozen=True)
class Prop2Record:
    trial_index: int
    n: int
    k: int
    poly_residual: float
    scalar_residual: float
    tolerance: float
    satisfied: bool

    def as_row(self) -> dict:
        return {'trial': self.trial_index, 'n': self.n, 'k': self.k, 'poly_residual': self.poly_residual,
                'scalar_residual': self.scalar_residual, 'tolerance': self.tolerance, 'satisfied': self.satisfied}


def random_hermitian(n: int, seed: int, trial: int) -> np.ndarray:
    b = _complex_gaussian(trial_generator(seed, trial), (n, n), 1.0)
    return (b + b.conj().T) / 2


def run_prop2(n: int, trials: int, seed: int, workers: int = 1) -> VerifySummary:
    """Principal-submatrix identity residuals for every k on random Hermitian matrices."""
    if not 1 <= n <= MAX_SUBSET_ORACLE_DIM:
        raise CapExceededError(f"identity check needs 1 <= n <= {MAX_SUBSET_ORACLE_DIM}, got {n}")
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")

    def one_trial(t):
        matrix = random_hermitian(n, seed, t)
        rows = []
        for k in range(1, n + 1):
            report = verify_submatrix_identity(matrix, k)
            rows.append(Prop2Record(t, n, k, report.poly_residual, report.scalar_residual,
                                    report.tolerance, report.holds))
        return rows

    logger.info(f"Starting submatrix identity check: {trials} Hermitian matrices of size {n}")
    records = [r for batch in _run_trials(one_trial, range(trials), workers) for r in batch]
    violations = sum(not r.satisfied for r in records)
    logger.info(f"Processed {len(records)} residual checks with {violations} violations")
    return VerifySummary(
        records=tuple(records),
        columns=tuple(PROP2_CSV_COLUMNS),
        violations=violations,
        worst_slack=min(r.tolerance - max(r.poly_residual, r.scalar_residual) for r in records),
    )


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def to_csv(summary: VerifySummary) -> str:
    """CSV text with a header row; identical inputs give identical bytes."""
    return summary.to_frame().to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')


def to_json(summary: VerifySummary) -> str:
    rows = [{k: (v.item() if isinstance(v, np.generic) else v) for k, v in row.items()}
            for row in summary.rows()]
    return json.dumps({'schema_version': CSV_SCHEMA_VERSION, 'records': rows}, indent=2)


def summary_dict(summary: VerifySummary) -> dict:
    data = {name: getattr(summary, name) for name in ("violations", "min_fraction", "mean_fraction", "worst_slack")}
    data['records'] = len(summary.records)
    return data
