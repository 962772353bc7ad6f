import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_limiter = None


def pytest_configure(config):
    # single-threaded LAPACK is faster at these sizes on small boxes and
    # keeps timing-sensitive acceptance checks stable
    global _limiter
    try:
        import threadpoolctl

        _limiter = threadpoolctl.threadpool_limits(limits=1)
    except ImportError:
        pass


@pytest.fixture(scope="session")
def ising4():
    import qmaxent as qm

    fam = qm.build_family("ising", 4, seed=7)
    return qm.make_instance(fam, seed=7)
