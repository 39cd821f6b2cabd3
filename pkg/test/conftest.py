"""
Configuration for Pytest
"""

import io
import pytest
import cowbound as cowbound_module
from cowbound.attack import SimSettings
from cowbound.base import CowBound
from cowbound.discrimination import build_problem
from cowbound.optimize import OptimizerSettings
from cowbound.states import ProtocolParams, build_ensemble

# Operating point used throughout the suite unless a test needs another one
TEST_ALPHA2 = 0.5
TEST_F = 0.155
TEST_T_B = 0.5


class MockCowBound(CowBound):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, stream=io.StringIO(), **kwargs)

    @property
    def test_output(self) -> str:
        '''
        Returns everything the commands wrote to standard output.
        '''
        return self.stream.getvalue()

    def clear_output(self):
        self.stream.seek(0)
        self.stream.truncate()


@pytest.fixture(scope="session")
def _cowbound():
    """
    Create a mocked toolkit and allow it to find handlers. Persists for the
    whole test session.
    """
    cowbound_module.toolkit = MockCowBound()
    cowbound_module.import_scripts()
    return cowbound_module.toolkit


@pytest.fixture()
def cowbound(_cowbound: MockCowBound):
    """
    Setup and tear-down steps to run around tests.
    """
    yield _cowbound
    # Anything after yield will be run after test
    _cowbound.clear_output()


@pytest.fixture()
def protocol() -> ProtocolParams:
    return ProtocolParams(alpha2=TEST_ALPHA2, f=TEST_F, t_B=TEST_T_B)


@pytest.fixture()
def problem(protocol):
    return build_problem(build_ensemble(protocol))


@pytest.fixture()
def sim_settings() -> SimSettings:
    return SimSettings(n_signals=20000, seed=3, chunk_signals=8192)


@pytest.fixture()
def small_optimizer(sim_settings) -> OptimizerSettings:
    """
    A coarse optimizer that keeps unit tests fast.
    """
    return OptimizerSettings(budget=2, m_min_grid=(1, 2, 4), q_p_grid=(0.0, 0.5, 1.0),
                             sim=sim_settings)
