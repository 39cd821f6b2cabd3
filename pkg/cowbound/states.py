'''
Coherent-state algebra for the coherent-one-way signal alphabet.

Bin convention: the "early" bin is the temporally first pulse of a signal.
BIT0 carries its non-empty pulse in the late bin, BIT1 in the early bin, so a
train reads left to right in time, e.g. BIT0 followed by BIT1 is
|0>|a>|a>|0> and its two middle pulses form the monitored pair "01".
All honest amplitudes are real and positive (one global laser phase).
'''
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from cowbound.utils.errors import InvalidParameterException

LOGGER = logging.getLogger(__name__)

# Monitored sequences, in the order used by every table the toolkit writes.
SEQUENCES = ('d', '01', '0d', 'd1', 'dd')


class SignalKind(enum.IntEnum):
    BIT0 = 0
    BIT1 = 1
    DECOY = 2
    VACUUM_PAIR = 3

    @property
    def pattern(self) -> Tuple[int, int]:
        '''
        Returns the (early, late) occupation of the signal's two pulses.
        '''
        return PATTERNS[self]

    @property
    def n_pulses(self) -> int:
        return sum(PATTERNS[self])


PATTERNS = {
    SignalKind.BIT0: (0, 1),
    SignalKind.BIT1: (1, 0),
    SignalKind.DECOY: (1, 1),
    SignalKind.VACUUM_PAIR: (0, 0),
}
# Array form indexed by kind value, used by the vectorised train code.
PATTERN_ARRAY = np.array([PATTERNS[kind] for kind in SignalKind], dtype=np.int8)
ALICE_KINDS = (SignalKind.BIT0, SignalKind.BIT1, SignalKind.DECOY)


def _check_range(name, value, low, high, low_open=False, high_open=False):
    too_low = value <= low if low_open else value < low
    too_high = value >= high if high_open else value > high
    if not math.isfinite(value) or too_low or too_high:
        left = '(' if low_open else '['
        right = ')' if high_open else ']'
        raise InvalidParameterException(name, value, f'must lie in {left}{low}, {high}{right}')


@dataclass(frozen=True)
class ProtocolParams:
    '''
    Alice/Bob/channel configuration. `delta_t` is informational only.
    '''
    alpha2: float
    f: float
    t_B: float = 0.5
    eta: float = 1.0
    delta_t: Optional[float] = None

    def __post_init__(self):
        _check_range('alpha2', self.alpha2, 0.0, math.inf, high_open=True)
        _check_range('f', self.f, 0.0, 1.0, low_open=True, high_open=True)
        _check_range('t_B', self.t_B, 0.0, 1.0, low_open=True, high_open=True)
        _check_range('eta', self.eta, 0.0, 1.0, low_open=True)

    @property
    def priors(self) -> np.ndarray:
        '''
        Returns (P0, P1, Pd) = ((1-f)/2, (1-f)/2, f).
        '''
        bit = (1.0 - self.f) / 2.0
        return np.array([bit, bit, self.f])

    def with_values(self, **changes) -> 'ProtocolParams':
        values = {
            'alpha2': self.alpha2, 'f': self.f, 't_B': self.t_B,
            'eta': self.eta, 'delta_t': self.delta_t,
        }
        values.update(changes)
        return ProtocolParams(**values)


@dataclass(frozen=True)
class SignalEnsemble:
    gram: np.ndarray = field(repr=False)
    priors: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.gram)[0])


def coherent_overlap(gamma2: float, delta2: float, same_phase: bool = True) -> float:
    '''
    Returns |<gamma|delta>| for real amplitudes with mean photon numbers
    gamma2 and delta2, either in phase or with a relative phase of pi.
    '''
    if gamma2 < 0 or delta2 < 0:
        raise InvalidParameterException('intensity', min(gamma2, delta2),
                                        'mean photon numbers cannot be negative')
    sign = -1.0 if same_phase else 1.0
    distance = math.sqrt(gamma2) + sign * math.sqrt(delta2)
    return math.exp(-0.5 * distance * distance)


def build_ensemble(p: ProtocolParams) -> SignalEnsemble:
    '''
    Returns the Gram matrix and priors of (BIT0, BIT1, DECOY). Overlaps are
    products of per-pulse overlaps.
    '''
    gram = np.ones((3, 3))
    for i, first in enumerate(ALICE_KINDS):
        for j, second in enumerate(ALICE_KINDS):
            overlap = 1.0
            for a, b in zip(first.pattern, second.pattern):
                overlap *= coherent_overlap(a * p.alpha2, b * p.alpha2)
            gram[i, j] = overlap
    return SignalEnsemble(gram=gram, priors=p.priors)


def honest_click_probabilities(p: ProtocolParams) -> Dict[SignalKind, float]:
    '''
    Returns the data-line click probability of each signal kind over the
    lossy channel with ideal detectors.
    '''
    mean = p.eta * p.t_B * p.alpha2
    return {kind: -math.expm1(-kind.n_pulses * mean) for kind in SignalKind}


def trivial_key_bound(p: ProtocolParams) -> Tuple[float, float]:
    '''
    Returns ((1-f)[1-exp(-eta t_B alpha2)], (1-f) eta alpha2); the first
    bounds the key rate and is strictly below the second for alpha2 > 0.
    '''
    trivial = (1.0 - p.f) * -math.expm1(-p.eta * p.t_B * p.alpha2)
    return trivial, (1.0 - p.f) * p.eta * p.alpha2


def sequence_probabilities(p: ProtocolParams) -> Dict[str, float]:
    '''
    Returns the probability that a given signal position starts sequence s.
    '''
    p0, p1, pd = p.priors
    return {'d': pd, '01': p0 * p1, '0d': p0 * pd, 'd1': pd * p1, 'dd': pd * pd}


def visibility(p1: float, p2: float) -> Optional[float]:
    '''
    Returns (p1 - p2) / (p1 + p2), or None when neither detector clicked.
    '''
    for name, value in (('p1', p1), ('p2', p2)):
        if not 0.0 <= value <= 1.0:
            raise InvalidParameterException(name, value, 'must lie in [0, 1]')
    total = p1 + p2
    if total <= 0.0:
        return None
    return (p1 - p2) / total


def honest_stats(p: ProtocolParams):
    '''
    Returns the closed-form ObservedStats of a lossy channel without Eve.
    '''
    # Imported here; estimators depends on this module.
    from cowbound.estimators import ObservedStats

    clicks = honest_click_probabilities(p)
    pd = p.f
    gain_bit = (1.0 - pd) * clicks[SignalKind.BIT0]
    gain_all = gain_bit + pd * clicks[SignalKind.DECOY]
    # Two in-phase pulses of the same block: all light exits D_M1.
    monitor = -math.expm1(-(1.0 - p.t_B) * p.eta * p.alpha2)
    p_m1 = {s: monitor for s in SEQUENCES}
    p_m2 = {s: 0.0 for s in SEQUENCES}
    zero = {s: 0.0 for s in SEQUENCES}
    return ObservedStats(
        gain_bit=gain_bit,
        gain_all=gain_all,
        qber=0.0 if gain_bit > 0 else None,
        p_m1=p_m1,
        p_m2=p_m2,
        vis={s: visibility(p_m1[s], p_m2[s]) for s in SEQUENCES},
        v_ave=visibility(monitor, 0.0),
        n_signals=0,
        gain_bit_err=0.0,
        gain_all_err=0.0,
        qber_err=0.0,
        p_m1_err=dict(zero),
        p_m2_err=dict(zero),
        vis_err=dict(zero),
        v_ave_err=0.0,
    )
