'''
Statistics accumulated by the Monte Carlo simulators.

Every sampling unit (a batch of consecutive signals, or one run of conclusive
outcomes with its guards) contributes a vector of expected quantities. All
reported numbers are ratios of unit sums, so the accumulator only needs the
count, the sum and the sum of outer products; merging two accumulators is
plain addition, which keeps the reduction associative.
'''
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional

import numpy as np

from cowbound.states import SEQUENCES, SignalKind

LOGGER = logging.getLogger(__name__)

# Layout of the per-unit quantity vector.
SIGNALS = 0
BIT_CLICK = 1
ALL_CLICK = 2
ERROR = 3
M1 = 4
M2 = M1 + len(SEQUENCES)
OCC = M2 + len(SEQUENCES)
N_QUANTITIES = OCC + len(SEQUENCES)


@dataclass(frozen=True)
class ObservedStats:
    '''
    Expected observables per emitted signal, with standard errors. Undefined
    quantities (no sifted clicks, no monitored clicks) are None.
    '''
    gain_bit: float
    gain_all: float
    qber: Optional[float]
    p_m1: Dict[str, Optional[float]]
    p_m2: Dict[str, Optional[float]]
    vis: Dict[str, Optional[float]]
    v_ave: Optional[float]
    n_signals: int
    gain_bit_err: float = 0.0
    gain_all_err: float = 0.0
    qber_err: float = 0.0
    p_m1_err: Dict[str, float] = field(default_factory=dict)
    p_m2_err: Dict[str, float] = field(default_factory=dict)
    vis_err: Dict[str, float] = field(default_factory=dict)
    v_ave_err: float = 0.0
    estimator: str = 'closed-form'

    @property
    def min_visibility(self) -> Optional[float]:
        '''
        Returns min_s V_s, or None if any visibility is undefined.
        '''
        values = [self.vis.get(s) for s in SEQUENCES]
        if any(value is None for value in values):
            return None
        return min(values)

    @property
    def undefined(self):
        return [s for s in SEQUENCES if self.vis.get(s) is None]

    def as_row(self) -> Dict[str, Optional[float]]:
        '''
        Flattens the statistics into the column layout used by output files.
        '''
        row = {
            'gain_bit': self.gain_bit,
            'gain_bit_err': self.gain_bit_err,
            'gain_all': self.gain_all,
            'gain_all_err': self.gain_all_err,
            'qber': self.qber,
            'qber_err': self.qber_err,
        }
        for s in SEQUENCES:
            row[f'V_{s}'] = self.vis.get(s)
            row[f'V_{s}_err'] = self.vis_err.get(s)
        row['V_ave'] = self.v_ave
        row['V_ave_err'] = self.v_ave_err
        for s in SEQUENCES:
            row[f'p_m1_{s}'] = self.p_m1.get(s)
            row[f'p_m2_{s}'] = self.p_m2.get(s)
        row['n_signals'] = self.n_signals
        row['estimator'] = self.estimator
        return row


class StatsAccumulator(object):
    '''
    Count, sum and sum of outer products of per-unit quantity vectors.
    '''

    def __init__(self, dim: int = N_QUANTITIES):
        self.n_units = 0
        self.total = np.zeros(dim)
        self.outer = np.zeros((dim, dim))

    def add_units(self, rows: np.ndarray) -> 'StatsAccumulator':
        self.n_units += rows.shape[0]
        self.total += rows.sum(axis=0)
        self.outer += rows.T @ rows
        return self

    def merge(self, other: 'StatsAccumulator') -> 'StatsAccumulator':
        merged = StatsAccumulator(self.total.shape[0])
        merged.n_units = self.n_units + other.n_units
        merged.total = self.total + other.total
        merged.outer = self.outer + other.outer
        return merged

    @classmethod
    def reduce(cls, parts: Iterable['StatsAccumulator']) -> 'StatsAccumulator':
        result = cls()
        for part in parts:
            result = result.merge(part)
        return result

    @property
    def covariance(self) -> np.ndarray:
        if self.n_units < 2:
            return np.zeros_like(self.outer)
        mean = self.total / self.n_units
        cov = self.outer / self.n_units - np.outer(mean, mean)
        return cov * self.n_units / (self.n_units - 1)

    def ratio(self, numerator: np.ndarray, denominator: np.ndarray):
        '''
        Returns (sum(u.x) / sum(v.x), delta-method standard error), or
        (None, 0) when the denominator vanishes.
        '''
        top = float(numerator @ self.total)
        bottom = float(denominator @ self.total)
        if bottom <= 0.0 or self.n_units == 0:
            return None, 0.0
        value = top / bottom
        cov = self.covariance
        gradient = numerator - value * denominator
        variance = float(gradient @ cov @ gradient) * self.n_units / (bottom * bottom)
        return value, math.sqrt(max(variance, 0.0))


def unit(index: int) -> np.ndarray:
    vector = np.zeros(N_QUANTITIES)
    vector[index] = 1.0
    return vector


def signal_quantities(alice: np.ndarray, data: np.ndarray, m1: np.ndarray,
                      m2: np.ndarray) -> np.ndarray:
    '''
    Returns the (n, N_QUANTITIES) per-signal quantity matrix for a train of
    Alice kinds and the receiver's per-slot click probabilities. The
    cross-boundary pair between signals i and i+1 is credited to signal i.
    '''
    n = alice.shape[0]
    rows = np.zeros((n, N_QUANTITIES))
    early = data[0::2]
    late = data[1::2]
    click = early + late - early * late
    both = early * late
    is_bit0 = alice == SignalKind.BIT0
    is_bit1 = alice == SignalKind.BIT1
    is_decoy = alice == SignalKind.DECOY
    rows[:, SIGNALS] = 1.0
    rows[:, BIT_CLICK] = np.where(is_bit0 | is_bit1, click, 0.0)
    rows[:, ALL_CLICK] = click
    # Double clicks are assigned a random bit.
    rows[:, ERROR] = (np.where(is_bit0, early - both, 0.0)
                      + np.where(is_bit1, late - both, 0.0)
                      + np.where(is_bit0 | is_bit1, 0.5 * both, 0.0))
    if n == 0:
        return rows
    next_bit1 = np.append(is_bit1[1:], False)
    next_decoy = np.append(is_decoy[1:], False)
    within = np.arange(n) * 2
    # The last signal has no cross pair; its masks below are all False.
    cross = np.minimum(within + 1, m1.shape[0] - 1)
    occurrences = {
        'd': (is_decoy, within),
        '01': (is_bit0 & next_bit1, cross),
        '0d': (is_bit0 & next_decoy, cross),
        'd1': (is_decoy & next_bit1, cross),
        'dd': (is_decoy & next_decoy, cross),
    }
    for k, s in enumerate(SEQUENCES):
        mask, pair = occurrences[s]
        rows[:, M1 + k] = np.where(mask, m1[pair], 0.0)
        rows[:, M2 + k] = np.where(mask, m2[pair], 0.0)
        rows[:, OCC + k] = mask
    return rows


def collapse_units(rows: np.ndarray, units: np.ndarray, n_units: int) -> np.ndarray:
    '''
    Sums per-signal rows into per-unit rows.
    '''
    collapsed = np.zeros((n_units, rows.shape[1]))
    np.add.at(collapsed, units, rows)
    return collapsed


def finalize(acc: StatsAccumulator, weights: Mapping[str, float], n_signals: int,
             estimator: str) -> ObservedStats:
    '''
    Turns accumulated unit sums into ObservedStats. V_ave combines the
    conditional click probabilities with the given per-sequence weights.
    '''
    signals = unit(SIGNALS)
    gain_bit, gain_bit_err = acc.ratio(unit(BIT_CLICK), signals)
    gain_all, gain_all_err = acc.ratio(unit(ALL_CLICK), signals)
    qber, qber_err = acc.ratio(unit(ERROR), unit(BIT_CLICK))
    p_m1, p_m2, vis = {}, {}, {}
    p_m1_err, p_m2_err, vis_err = {}, {}, {}
    ave_num = np.zeros(N_QUANTITIES)
    ave_den = np.zeros(N_QUANTITIES)
    for k, s in enumerate(SEQUENCES):
        occ = unit(OCC + k)
        p_m1[s], p_m1_err[s] = acc.ratio(unit(M1 + k), occ)
        p_m2[s], p_m2_err[s] = acc.ratio(unit(M2 + k), occ)
        if p_m1[s] is None:
            LOGGER.warning(f'Sequence {s} never occurred in {n_signals} signals')
        vis[s], vis_err[s] = acc.ratio(unit(M1 + k) - unit(M2 + k), unit(M1 + k) + unit(M2 + k))
        occ_total = float(acc.total[OCC + k])
        if occ_total > 0:
            scale = weights.get(s, 0.0) / occ_total
            ave_num += scale * (unit(M1 + k) - unit(M2 + k))
            ave_den += scale * (unit(M1 + k) + unit(M2 + k))
    v_ave, v_ave_err = acc.ratio(ave_num, ave_den)
    return ObservedStats(
        gain_bit=gain_bit or 0.0,
        gain_all=gain_all or 0.0,
        qber=qber,
        p_m1=p_m1,
        p_m2=p_m2,
        vis=vis,
        v_ave=v_ave,
        n_signals=n_signals,
        gain_bit_err=gain_bit_err,
        gain_all_err=gain_all_err,
        qber_err=qber_err,
        p_m1_err=p_m1_err,
        p_m2_err=p_m2_err,
        vis_err=vis_err,
        v_ave_err=v_ave_err,
        estimator=estimator,
    )


def empty_stats(n_signals: int, estimator: str) -> ObservedStats:
    '''
    Statistics of a train in which Bob never receives light.
    '''
    zeros = {s: 0.0 for s in SEQUENCES}
    return ObservedStats(
        gain_bit=0.0, gain_all=0.0, qber=None, p_m1=dict(zeros), p_m2=dict(zeros),
        vis={s: None for s in SEQUENCES}, v_ave=None, n_signals=n_signals,
        p_m1_err=dict(zeros), p_m2_err=dict(zeros), vis_err=dict(zeros),
        estimator=estimator,
    )
