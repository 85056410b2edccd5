import math

import pytest

from lilyseg import MarkedPoint, MarkedPointSet

SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="session")
def f2() -> MarkedPointSet:
    """Two transversal points: horizontal through the origin, vertical at (3, 4).

    Carrier intersection (3, 0); growth distances 3 and 4.
    Model 1 solution {inf, 4}; Model 2 solution {4, 4} with a doublet.
    """
    return MarkedPointSet((MarkedPoint(0.0, 0.0, 0.0), MarkedPoint(3.0, 4.0, math.pi / 2)))


@pytest.fixture(scope="session")
def f3() -> MarkedPointSet:
    """Three transversal points with hand-computed growth distances.

    d01=4, d10=3, d02=6, d20=3*sqrt2, d12=5, d21=5*sqrt2.
    Model 1 solution {4, inf, 5*sqrt2}; Model 2 solution {4, 4, inf}.
    """
    return MarkedPointSet(
        (
            MarkedPoint(0.0, 0.0, 0.0),
            MarkedPoint(4.0, 3.0, math.pi / 2),
            MarkedPoint(9.0, 3.0, math.pi / 4),
        )
    )


# Planted all-finite configuration: under Model 1 the three segments stop
# each other cyclically (0 -> 2 -> 1 -> 0).  Radii frozen from the greedy
# growth simulation and confirmed by the other two solvers.
F3C_POINTS = (
    MarkedPoint(3.4, 2.6, 0.21),
    MarkedPoint(3.6, 0.1, 1.94),
    MarkedPoint(6.3, 2.8, 0.55),
)
F3C_RADII_M1 = (4.034003387810179, 2.51862014081332, 3.550284051464707)
F3C_RADII_M2 = (2.51862014081332, 2.51862014081332, 3.550284051464707)


@pytest.fixture(scope="session")
def f3c() -> MarkedPointSet:
    return MarkedPointSet(F3C_POINTS)
