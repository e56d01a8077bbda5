import pytest

from csdtc import CircuitParams, reference_device


@pytest.fixture(scope="session")
def device():
    return reference_device()


@pytest.fixture(scope="session")
def decoupled():
    """All coupling paths removed; a tiny Ic5 stands in for the EJ5 -> 0 limit.

    Nodes 3 and 4 are deliberately detuned so no two single-mode levels are
    degenerate (degenerate pairs would make product labels ill-defined).
    """
    return CircuitParams(
        c11=108.0, c22=80.0, c33=90.0, c44=95.0,
        c12=0.0, c13=0.0, c14=0.0, c23=0.0, c24=0.0, c34=0.0,
        ic1=26.7, ic2=26.6, ic3=55.2, ic4=52.0, ic5=1e-9,
    )
