'''
Monte Carlo engine for the sequential attack.

Eve measures every signal, keeps maximal runs of conclusive results that are
at least m_min long, optionally trims each run so that no non-empty pulse
touches a coherence break, and resends the kept signals with intensity beta2
over a lossless channel. Bob's receiver is evaluated in expectation: the
simulator returns click probabilities per slot rather than sampled clicks.

Simulation is split in two steps. `simulate_structure` draws everything that
does not depend on beta2 (Alice's train, Eve's outcomes, run decisions) and
`evaluate_structure` pushes the resulting train through the receiver for a
given beta2, so that candidate intensities share random numbers.
'''
import concurrent.futures
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy import special

from cowbound.discrimination import MeasurementModel, build_problem, intermediate_measurement
from cowbound.estimators import (
    OCC, SIGNALS, ObservedStats, StatsAccumulator, collapse_units, empty_stats, finalize,
    signal_quantities,
)
from cowbound.states import (
    PATTERN_ARRAY, SEQUENCES, ProtocolParams, SignalKind, build_ensemble,
    sequence_probabilities,
)
from cowbound.utils.errors import InvalidParameterException

LOGGER = logging.getLogger(__name__)

INCONCLUSIVE = -1
NO_BLOCK = -1
ESTIMATORS = ('auto', 'train', 'runs')
PHASE_MODES = ('average', 'sample')
# Signals per sampling unit of the train estimator.
TRAIN_BATCH = 256
# Runs are sampled directly once conclusive results are this rare.
RUNS_THRESHOLD = 0.5
MAX_RUN_LENGTH = 10 ** 7


@dataclass(frozen=True)
class AttackParams:
    q_inc: float
    q_p: float
    m_min: int
    beta2: float

    def __post_init__(self):
        for name in ('q_inc', 'q_p'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterException(name, value, 'must lie in [0, 1]')
        if int(self.m_min) != self.m_min or self.m_min < 1:
            raise InvalidParameterException('m_min', self.m_min, 'must be a positive integer')
        if not math.isfinite(self.beta2) or self.beta2 < 0:
            raise InvalidParameterException('beta2', self.beta2, 'must be non-negative')

    def with_values(self, **changes) -> 'AttackParams':
        values = {'q_inc': self.q_inc, 'q_p': self.q_p, 'm_min': self.m_min,
                  'beta2': self.beta2}
        values.update(changes)
        return AttackParams(**values)

    def as_row(self) -> Dict[str, float]:
        return {'q_inc': self.q_inc, 'q_p': self.q_p, 'm_min': self.m_min,
                'beta2': self.beta2}


@dataclass(frozen=True)
class SimSettings:
    n_signals: int = 200000
    seed: int = 0
    replicas: int = 1
    estimator: str = 'auto'
    phase_mode: str = 'average'
    chunk_signals: int = 65536
    run_length_tilt: float = 0.5

    def __post_init__(self):
        if self.n_signals < 1:
            raise InvalidParameterException('n_signals', self.n_signals, 'must be at least 1')
        if self.seed < 0:
            raise InvalidParameterException('seed', self.seed, 'must be non-negative')
        if self.replicas < 1:
            raise InvalidParameterException('replicas', self.replicas, 'must be at least 1')
        if self.estimator not in ESTIMATORS:
            raise InvalidParameterException('estimator', self.estimator,
                                            f'must be one of {", ".join(ESTIMATORS)}')
        if self.phase_mode not in PHASE_MODES:
            raise InvalidParameterException('phase_mode', self.phase_mode,
                                            f'must be one of {", ".join(PHASE_MODES)}')
        if self.chunk_signals < 2:
            raise InvalidParameterException('chunk_signals', self.chunk_signals,
                                            'must be at least 2')
        if not 0.0 < self.run_length_tilt < 1.0:
            raise InvalidParameterException('run_length_tilt', self.run_length_tilt,
                                            'must lie in (0, 1)')

    def with_values(self, **changes) -> 'SimSettings':
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class PulseTrain:
    '''
    Per-slot mean photon numbers, two slots per signal, and per-slot block
    labels. Slots of one block are phase-coherent; NO_BLOCK marks vacuum.
    '''
    amplitudes: np.ndarray
    block_id: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape[0] % 2 or self.amplitudes.shape != self.block_id.shape:
            raise InvalidParameterException('train', self.amplitudes.shape[0],
                                            'needs two slots per signal and one label per slot')

    @property
    def n_signals(self) -> int:
        return self.amplitudes.shape[0] // 2


@dataclass(frozen=True)
class ReceiverClicks:
    '''
    Expected click probabilities: `data` per slot, `m1`/`m2` per
    interference slot between slots k and k+1.
    '''
    data: np.ndarray
    m1: np.ndarray
    m2: np.ndarray


@dataclass
class ChunkDraws:
    '''
    Random draws of one chunk that do not depend on Eve's run decisions.
    '''
    alice: np.ndarray
    outcomes: np.ndarray
    trim_draws: np.ndarray
    phases: np.ndarray
    units: np.ndarray
    n_units: int
    unit_weights: Optional[np.ndarray] = None
    # Per-unit constants overriding accumulated columns (run estimator).
    fixed_columns: Dict[int, float] = field(default_factory=dict)


@dataclass
class SimulationDraws:
    chunks: List[ChunkDraws]
    estimator: str
    n_signals: int
    phase_mode: str = 'average'
    replicas: int = 1


@dataclass
class ChunkStructure:
    draws: ChunkDraws
    resend: np.ndarray
    signal_block: np.ndarray


@dataclass
class AttackStructure:
    '''
    Everything about a simulated attack except Eve's resend intensity.
    '''
    chunks: List[ChunkStructure]
    estimator: str
    n_signals: int
    lossless: bool = True
    phase_mode: str = 'average'
    # Data-line gain per signal from kept bit positions resent as one or two pulses.
    gain_coeffs: Tuple[float, float] = (0.0, 0.0)
    replicas: int = 1

    def gain_bit(self, beta2: float, t_B: float, eta: float = 1.0) -> float:
        mean = t_B * beta2 * (1.0 if self.lossless else eta)
        single, double = self.gain_coeffs
        return single * -math.expm1(-mean) + double * -math.expm1(-2.0 * mean)

    @property
    def max_gain_bit(self) -> float:
        return float(sum(self.gain_coeffs))


def _kinds_from_uniforms(draws: np.ndarray, probabilities: np.ndarray) -> np.ndarray:
    cumulative = np.cumsum(probabilities)
    cumulative[-1] = 1.0
    kinds = np.searchsorted(cumulative, draws, side='right')
    return np.minimum(kinds, len(probabilities) - 1).astype(np.int8)


def sample_alice_train(p: ProtocolParams, n: int, seed: int = 0) -> np.ndarray:
    '''
    Returns n i.i.d. signal kinds drawn with probabilities (P0, P1, Pd).
    '''
    if n < 1:
        raise InvalidParameterException('n', n, 'must be at least 1')
    return _kinds_from_uniforms(np.random.default_rng(seed).random(n), p.priors)


def _outcome_table(m: MeasurementModel) -> np.ndarray:
    '''
    Row j: cumulative probabilities of (identify BIT0, BIT1, DECOY,
    inconclusive) given that j was sent.
    '''
    conclusive = np.asarray(m.conclusive_prob)
    table = np.zeros((3, 4))
    table[:, :3] = (np.asarray(m.confusion) * conclusive[None, :]).T
    table[:, 3] = 1.0 - conclusive
    cumulative = np.cumsum(table, axis=1)
    cumulative[:, -1] = 1.0
    return cumulative


def measure_from_uniforms(kinds: np.ndarray, m: MeasurementModel,
                          draws: np.ndarray) -> np.ndarray:
    cumulative = _outcome_table(m)[kinds]
    outcomes = (draws[:, None] >= cumulative).sum(axis=1)
    return np.where(outcomes >= 3, INCONCLUSIVE, outcomes).astype(np.int8)


def eve_measure_train(train: np.ndarray, m: MeasurementModel, seed: int = 0) -> np.ndarray:
    '''
    Returns Eve's outcome per signal: the identified SignalKind value, or
    INCONCLUSIVE.
    '''
    draws = np.random.default_rng(seed).random(train.shape[0])
    return measure_from_uniforms(np.asarray(train), m, draws)


def conclusive_runs(outcomes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    '''
    Returns start and (exclusive) end indices of maximal conclusive runs.
    '''
    conclusive = np.concatenate(([0], (outcomes != INCONCLUSIVE).astype(np.int8), [0]))
    edges = np.diff(conclusive)
    return np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)


def resend_plan(outcomes: np.ndarray, a: AttackParams,
                trim_draws: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    '''
    Applies the run-length cutoff and the trimming rule. Returns the kind
    Eve resends per signal (VACUUM_PAIR outside kept segments) and the
    segment label per signal. A run is trimmed when the draw at its first
    signal is below q_p.
    '''
    n = outcomes.shape[0]
    starts, ends = conclusive_runs(outcomes)
    keep = (ends - starts) >= a.m_min
    starts, ends = starts[keep], ends[keep]
    trim = trim_draws[starts] < a.q_p
    if np.any(trim):
        # The kept segment must open with vacuum (BIT0) and close with vacuum (BIT1).
        index = np.arange(n)
        next_bit0 = np.minimum.accumulate(
            np.where(outcomes == SignalKind.BIT0, index, n)[::-1])[::-1]
        last_bit1 = np.maximum.accumulate(np.where(outcomes == SignalKind.BIT1, index, -1))
        first = next_bit0[starts[trim]]
        last = last_bit1[ends[trim] - 1]
        valid = (first < ends[trim]) & (last >= starts[trim]) & (first <= last)
        new_starts = starts.copy()
        new_ends = ends.copy()
        new_starts[trim] = np.where(valid, first, starts[trim])
        new_ends[trim] = np.where(valid, last + 1, starts[trim])
        starts, ends = new_starts, new_ends
        nonempty = ends > starts
        starts, ends = starts[nonempty], ends[nonempty]
    marks = np.zeros(n + 1, dtype=np.int64)
    np.add.at(marks, starts, 1)
    np.add.at(marks, ends, -1)
    inside = np.cumsum(marks[:n]) > 0
    opened = np.zeros(n, dtype=np.int64)
    opened[starts] = 1
    segment = np.where(inside, np.cumsum(opened) - 1, NO_BLOCK)
    resend = np.where(inside, outcomes, SignalKind.VACUUM_PAIR).astype(np.int8)
    return resend, segment


def pulse_train(kinds: np.ndarray, signal_block: np.ndarray, intensity: float) -> PulseTrain:
    occupancy = PATTERN_ARRAY[kinds].ravel()
    blocks = np.where(occupancy > 0, np.repeat(signal_block, 2), NO_BLOCK)
    return PulseTrain(amplitudes=occupancy * float(intensity), block_id=blocks)


def alice_pulse_train(kinds: np.ndarray, alpha2: float) -> PulseTrain:
    '''
    Alice's own train: one phase-coherent block.
    '''
    return pulse_train(kinds, np.zeros(kinds.shape[0], dtype=np.int64), alpha2)


def build_eve_train(outcomes: np.ndarray, a: AttackParams, seed: int = 0,
                    trim_draws: Optional[np.ndarray] = None) -> PulseTrain:
    '''
    Builds Eve's resent train from her outcomes: one coherent block per kept
    segment, beta2 per non-empty pulse.
    '''
    outcomes = np.asarray(outcomes)
    if trim_draws is None:
        trim_draws = np.random.default_rng(seed).random(outcomes.shape[0])
    resend, segment = resend_plan(outcomes, a, trim_draws)
    return pulse_train(resend, segment, a.beta2)


def bob_receive(train: PulseTrain, p: ProtocolParams, lossless: bool, seed: int = 0,
                phase_mode: str = 'average',
                phases: Optional[np.ndarray] = None) -> ReceiverClicks:
    '''
    Returns expected click probabilities at D_d (per slot) and D_M1/D_M2 (per
    interference slot). Pulses of different blocks have a uniformly random
    relative phase, averaged analytically or drawn per pair.
    '''
    scale = 1.0 if lossless else p.eta
    amplitudes = train.amplitudes
    data = -np.expm1(-p.t_B * scale * amplitudes)
    if amplitudes.shape[0] < 2:
        return ReceiverClicks(data, np.zeros(0), np.zeros(0))
    factor = (1.0 - p.t_B) / 4.0 * scale
    roots = np.sqrt(amplitudes)
    left, right = roots[:-1], roots[1:]
    bright = factor * (left + right) ** 2
    dark = factor * (left - right) ** 2
    coherent = train.block_id[:-1] == train.block_id[1:]
    m1 = -np.expm1(-bright)
    m2 = -np.expm1(-dark)
    incoherent = ~coherent
    if np.any(incoherent):
        mean = factor * (left * left + right * right)
        cross = 2.0 * factor * left * right
        if phase_mode == 'average':
            # Phase average of 1 - exp(-A - B cos t) is 1 - exp(-A) I0(B).
            averaged = -np.expm1(-dark + np.log(special.i0e(cross)))
            m1 = np.where(incoherent, averaged, m1)
            m2 = np.where(incoherent, averaged, m2)
        elif phase_mode == 'sample':
            if phases is None:
                phases = np.random.default_rng(seed).random(amplitudes.shape[0] - 1)
            cosine = np.cos(2.0 * math.pi * phases)
            m1 = np.where(incoherent, -np.expm1(-(mean + cross * cosine)), m1)
            m2 = np.where(incoherent, -np.expm1(-(mean - cross * cosine)), m2)
        else:
            raise InvalidParameterException('phase_mode', phase_mode,
                                            f'must be one of {", ".join(PHASE_MODES)}')
    return ReceiverClicks(data, m1, m2)


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _chunk_sizes(total: int, size: int) -> List[int]:
    sizes = [size] * (total // size)
    if total % size:
        sizes.append(total % size)
    return sizes


def _train_draws(p: ProtocolParams, m: MeasurementModel, size: int, seed: int,
                 index: int) -> ChunkDraws:
    rng = _chunk_rng(seed, index)
    draws = rng.random((3, size))
    phases = rng.random(max(2 * size - 1, 0))
    alice = _kinds_from_uniforms(draws[0], p.priors)
    outcomes = measure_from_uniforms(alice, m, draws[1])
    units = np.arange(size) // TRAIN_BATCH
    return ChunkDraws(alice, outcomes, draws[2], phases, units, int(units[-1]) + 1)


def _runs_draws(p: ProtocolParams, m: MeasurementModel, n_runs: int, seed: int,
                index: int, tilt: float) -> ChunkDraws:
    '''
    Samples n_runs conclusive runs, each preceded by an inconclusive guard
    signal, with one extra guard at the end. Run lengths come from a
    geometric proposal with parameter min(q, tilt) and carry likelihood
    ratio weights. Runs start at a rate of q(1 - q) per signal.
    '''
    priors = p.priors
    conclusive = np.asarray(m.conclusive_prob)
    q = float(np.dot(priors, 1.0 - conclusive))
    proposal = min(q, tilt)
    rng = _chunk_rng(seed, index)
    length_draws = rng.random(n_runs)
    lengths = 1 + np.floor(np.log1p(-length_draws) / math.log1p(-proposal))
    lengths = np.minimum(lengths, MAX_RUN_LENGTH).astype(np.int64)
    log_weights = ((lengths - 1) * (math.log1p(-q) - math.log1p(-proposal))
                   + math.log(q) - math.log(proposal))
    weights = np.exp(log_weights)

    total = int(lengths.sum()) + n_runs + 1
    run_starts = 1 + np.arange(n_runs) + np.cumsum(lengths) - lengths
    is_guard = np.zeros(total, dtype=bool)
    is_guard[run_starts - 1] = True
    is_guard[-1] = True
    # A guard belongs to the run after it; the final guard to the last run.
    units = np.minimum(np.cumsum(is_guard) - 1, n_runs - 1)

    draws = rng.random((3, total))
    phases = rng.random(2 * total - 1)
    in_run = (priors * conclusive) / (1.0 - q)
    on_guard = (priors * (1.0 - conclusive)) / q
    alice = np.where(is_guard, _kinds_from_uniforms(draws[0], on_guard),
                     _kinds_from_uniforms(draws[0], in_run)).astype(np.int8)
    confusion = np.cumsum(np.asarray(m.confusion), axis=0).T
    confusion[:, -1] = 1.0
    identified = (draws[1][:, None] >= confusion[alice][:, :2]).sum(axis=1)
    outcomes = np.where(is_guard, INCONCLUSIVE, identified).astype(np.int8)

    rate = q * (1.0 - q)
    occurrence = sequence_probabilities(p)
    fixed = {SIGNALS: 1.0 / rate}
    for k, s in enumerate(SEQUENCES):
        fixed[OCC + k] = occurrence[s] / rate
    return ChunkDraws(alice, outcomes, draws[2], phases, units, n_runs,
                      unit_weights=weights, fixed_columns=fixed)


def _map_chunks(function, items, replicas: int):
    if replicas <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=replicas) as executor:
        return list(executor.map(function, items))


def select_estimator(q: float, requested: str) -> str:
    if requested == 'auto':
        return 'runs' if q >= RUNS_THRESHOLD else 'train'
    if requested == 'runs' and q <= 1e-12:
        LOGGER.warning('Run estimator needs inconclusive results; using the train estimator')
        return 'train'
    return requested


def measurement_for(p: ProtocolParams, q_inc: float) -> MeasurementModel:
    return intermediate_measurement(build_problem(build_ensemble(p)), q_inc)


def draw_chunks(p: ProtocolParams, model: MeasurementModel,
                settings: Optional[SimSettings] = None) -> SimulationDraws:
    '''
    Draws Alice's train and Eve's outcomes in fixed-size chunks. Chunk k is
    seeded from (seed, k) alone, so the result does not depend on how many
    workers are used.
    '''
    settings = settings or SimSettings()
    q = float(np.dot(p.priors, 1.0 - np.asarray(model.conclusive_prob)))
    estimator = select_estimator(q, settings.estimator)
    if q >= 1.0 - 1e-15:
        return SimulationDraws([], estimator, settings.n_signals, settings.phase_mode,
                               settings.replicas)
    if estimator == 'runs':
        sizes = _chunk_sizes(max(settings.n_signals // 2, 1), max(settings.chunk_signals // 2, 1))
        chunks = _map_chunks(
            lambda item: _runs_draws(p, model, item[1], settings.seed, item[0],
                                     settings.run_length_tilt),
            list(enumerate(sizes)), settings.replicas)
    else:
        sizes = _chunk_sizes(settings.n_signals, settings.chunk_signals)
        chunks = _map_chunks(
            lambda item: _train_draws(p, model, item[1], settings.seed, item[0]),
            list(enumerate(sizes)), settings.replicas)
    return SimulationDraws(chunks, estimator, settings.n_signals, settings.phase_mode,
                           settings.replicas)


def _gain_terms(chunk: ChunkStructure) -> Tuple[float, float, float]:
    draws = chunk.draws
    is_bit = draws.alice < SignalKind.DECOY
    weights = np.ones(draws.n_units) if draws.unit_weights is None else draws.unit_weights
    per_signal = weights[draws.units]
    single = is_bit & ((chunk.resend == SignalKind.BIT0) | (chunk.resend == SignalKind.BIT1))
    double = is_bit & (chunk.resend == SignalKind.DECOY)
    if SIGNALS in draws.fixed_columns:
        signals = draws.fixed_columns[SIGNALS] * draws.n_units
    else:
        signals = float(draws.alice.shape[0])
    return float(per_signal[single].sum()), float(per_signal[double].sum()), signals


def structure_from_draws(draws: SimulationDraws, a: AttackParams) -> AttackStructure:
    '''
    Applies Eve's run cutoff and trimming to pre-drawn outcomes.
    '''
    chunks = []
    for chunk in draws.chunks:
        resend, segment = resend_plan(chunk.outcomes, a, chunk.trim_draws)
        chunks.append(ChunkStructure(chunk, resend, segment))
    if not chunks:
        return AttackStructure([], draws.estimator, draws.n_signals,
                               phase_mode=draws.phase_mode, replicas=draws.replicas)
    terms = np.array([_gain_terms(chunk) for chunk in chunks])
    coeffs = (float(terms[:, 0].sum() / terms[:, 2].sum()),
              float(terms[:, 1].sum() / terms[:, 2].sum()))
    return AttackStructure(chunks, draws.estimator, draws.n_signals, True, draws.phase_mode,
                           coeffs, draws.replicas)


def simulate_structure(p: ProtocolParams, a: AttackParams,
                       settings: Optional[SimSettings] = None,
                       model: Optional[MeasurementModel] = None) -> AttackStructure:
    '''
    Draws Alice's train, Eve's outcomes and her run decisions. The result
    does not depend on a.beta2.
    '''
    model = model or measurement_for(p, a.q_inc)
    structure = structure_from_draws(draw_chunks(p, model, settings), a)
    LOGGER.debug(f'Simulated {a} with the {structure.estimator} estimator '
                 f'in {len(structure.chunks)} chunks')
    return structure


def _evaluate_chunk(chunk: ChunkStructure, p: ProtocolParams, intensity: float,
                    lossless: bool, phase_mode: str) -> StatsAccumulator:
    draws = chunk.draws
    train = pulse_train(chunk.resend, chunk.signal_block, intensity)
    clicks = bob_receive(train, p, lossless, phase_mode=phase_mode, phases=draws.phases)
    rows = signal_quantities(draws.alice, clicks.data, clicks.m1, clicks.m2)
    units = collapse_units(rows, draws.units, draws.n_units)
    if draws.unit_weights is not None:
        units *= draws.unit_weights[:, None]
    for column, value in draws.fixed_columns.items():
        units[:, column] = value
    return StatsAccumulator().add_units(units)


def evaluate_structure(structure: AttackStructure, p: ProtocolParams, beta2: float,
                       weights: Optional[Mapping[str, float]] = None) -> ObservedStats:
    '''
    Returns the observed statistics when the structure's kept signals are
    resent with intensity beta2. V_ave weights default to the occurrence
    probability of each sequence.
    '''
    if beta2 < 0:
        raise InvalidParameterException('beta2', beta2, 'must be non-negative')
    if not structure.chunks:
        return empty_stats(structure.n_signals, structure.estimator)
    weights = weights or sequence_probabilities(p)
    parts = _map_chunks(
        lambda chunk: _evaluate_chunk(chunk, p, beta2, structure.lossless, structure.phase_mode),
        structure.chunks, structure.replicas)
    return finalize(StatsAccumulator.reduce(parts), weights, structure.n_signals,
                    structure.estimator)


def run_attack_sim(p: ProtocolParams, a: AttackParams, n: Optional[int] = None,
                   seed: Optional[int] = None, settings: Optional[SimSettings] = None,
                   weights: Optional[Mapping[str, float]] = None) -> ObservedStats:
    settings = settings or SimSettings()
    if n is not None:
        settings = settings.with_values(n_signals=n)
    if seed is not None:
        settings = settings.with_values(seed=seed)
    structure = simulate_structure(p, a, settings)
    return evaluate_structure(structure, p, a.beta2, weights)


def honest_sim(p: ProtocolParams, n: Optional[int] = None, seed: Optional[int] = None,
               settings: Optional[SimSettings] = None) -> ObservedStats:
    '''
    Monte Carlo of Alice's own train over the lossy channel, without Eve.
    '''
    settings = settings or SimSettings()
    n = settings.n_signals if n is None else n
    seed = settings.seed if seed is None else seed

    def chunk(item):
        index, size = item
        alice = _kinds_from_uniforms(_chunk_rng(seed, index).random(size), p.priors)
        units = np.arange(size) // TRAIN_BATCH
        draws = ChunkDraws(alice, alice, np.ones(size), np.zeros(max(2 * size - 1, 0)),
                           units, int(units[-1]) + 1)
        return ChunkStructure(draws, alice, np.zeros(size, dtype=np.int64))

    chunks = _map_chunks(chunk, list(enumerate(_chunk_sizes(n, settings.chunk_signals))),
                         settings.replicas)
    structure = AttackStructure(chunks, 'honest', n, lossless=False,
                                phase_mode=settings.phase_mode, replicas=settings.replicas)
    return evaluate_structure(structure, p, p.alpha2)
