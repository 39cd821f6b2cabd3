"""
Tests of the Monte Carlo statistics
"""
import math

import numpy as np
import pytest

from cowbound.estimators import (
    ALL_CLICK, BIT_CLICK, ERROR, M1, M2, N_QUANTITIES, OCC, SIGNALS, StatsAccumulator,
    collapse_units, empty_stats, finalize, signal_quantities, unit,
)
from cowbound.states import SEQUENCES, SignalKind


def test_accumulator_merge_is_associative():
    rows = np.random.default_rng(4).random((30, N_QUANTITIES))
    a = StatsAccumulator().add_units(rows[:7])
    b = StatsAccumulator().add_units(rows[7:19])
    c = StatsAccumulator().add_units(rows[19:])
    left = a.merge(b).merge(c)
    right = a.merge(b.merge(c))
    whole = StatsAccumulator().add_units(rows)
    for merged in (left, right, StatsAccumulator.reduce([a, b, c])):
        assert merged.n_units == 30
        assert np.allclose(merged.total, whole.total)
        assert np.allclose(merged.outer, whole.outer)


def test_ratio_standard_error():
    '''
    Alternating units (1, 1) and (0, 1): ratio 1/2 with delta-method
    standard error sqrt(1/12).
    '''
    acc = StatsAccumulator(dim=2).add_units(np.array([[1, 1], [0, 1], [1, 1], [0, 1]],
                                                     dtype=float))
    value, err = acc.ratio(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert value == pytest.approx(0.5)
    assert err == pytest.approx(math.sqrt(1 / 12))


def test_ratio_undefined():
    acc = StatsAccumulator(dim=2).add_units(np.array([[1.0, 0.0]]))
    assert acc.ratio(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == (None, 0.0)
    assert StatsAccumulator().ratio(unit(BIT_CLICK), unit(SIGNALS)) == (None, 0.0)


def test_signal_quantities_layout():
    alice = np.array([SignalKind.BIT0, SignalKind.BIT1, SignalKind.DECOY, SignalKind.DECOY],
                     dtype=np.int8)
    data = np.array([0.1, 0.2, 0.3, 0.0, 0.5, 0.5, 0.25, 0.25])
    m1 = np.arange(1, 8) / 10.0
    m2 = np.arange(1, 8) / 100.0
    rows = signal_quantities(alice, data, m1, m2)
    assert rows.shape == (4, N_QUANTITIES)
    assert np.all(rows[:, SIGNALS] == 1.0)
    # BIT0: early click is an error, half of the double clicks too
    assert rows[0, ERROR] == pytest.approx(0.1 - 0.02 + 0.01)
    assert rows[1, ERROR] == pytest.approx(0.0)
    assert rows[2, BIT_CLICK] == 0.0
    assert rows[2, ALL_CLICK] == pytest.approx(0.75)
    occ = {s: rows[:, OCC + k] for k, s in enumerate(SEQUENCES)}
    assert list(occ['01']) == [1, 0, 0, 0]
    assert list(occ['d']) == [0, 0, 1, 1]
    assert list(occ['dd']) == [0, 0, 1, 0]
    assert occ['0d'].sum() == occ['d1'].sum() == 0
    k01 = SEQUENCES.index('01')
    kd = SEQUENCES.index('d')
    kdd = SEQUENCES.index('dd')
    # '01' is the cross pair of signals 0 and 1; 'd' the within pair
    assert rows[0, M1 + k01] == pytest.approx(m1[1])
    assert rows[2, M1 + kd] == pytest.approx(m1[4])
    assert rows[3, M2 + kd] == pytest.approx(m2[6])
    assert rows[2, M1 + kdd] == pytest.approx(m1[5])


def test_collapse_units():
    rows = np.ones((5, 3))
    collapsed = collapse_units(rows, np.array([0, 0, 1, 2, 2]), 3)
    assert collapsed[:, 0].tolist() == [2.0, 1.0, 2.0]


def test_finalize_coherent_train():
    '''
    A train whose monitored pairs only fire D_M1 has unit visibilities.
    '''
    alice = np.array([SignalKind.BIT0, SignalKind.BIT1, SignalKind.DECOY, SignalKind.DECOY,
                      SignalKind.BIT1, SignalKind.BIT0], dtype=np.int8)
    n = alice.shape[0]
    rows = signal_quantities(alice, np.full(2 * n, 0.1), np.full(2 * n - 1, 0.2),
                             np.zeros(2 * n - 1))
    acc = StatsAccumulator().add_units(rows)
    stats = finalize(acc, {s: 1.0 for s in SEQUENCES}, n, 'train')
    assert stats.gain_all == pytest.approx(0.19)
    assert stats.vis['d'] == 1.0
    assert stats.vis['0d'] is None
    assert stats.min_visibility is None
    assert stats.undefined == ['0d']
    assert stats.v_ave == pytest.approx(1.0)
    assert stats.estimator == 'train'


def test_empty_stats():
    stats = empty_stats(10, 'runs')
    assert stats.gain_bit == 0.0
    assert stats.qber is None
    assert all(stats.vis[s] is None for s in SEQUENCES)
    row = stats.as_row()
    assert row['qber'] is None
    assert row['estimator'] == 'runs'
