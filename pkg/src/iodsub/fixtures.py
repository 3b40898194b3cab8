"""Published test scenarios, printed to six significant digits.

Matrices are given column-per-line, as printed.  Because of the
truncation, the listed normals are zeros of the master function only to
about 1e-5.
"""
from __future__ import annotations

import numpy as np

from .mastermap import Scenario

SINGLE_OBSERVER_W = np.array([-0.18511, -0.944226, 0.272346])

SINGLE_OBSERVER_P = np.array([
    [0.190367] * 5,
    [-1.19796] * 5,
    [-0.352143] * 5,
])

SINGLE_OBSERVER_U = np.array([
    [-0.247813, 0.635429, 0.456836, -0.536783, -0.972279],
    [1.07074, 1.07438, 1.42462, 1.63744, 1.41873],
    [-0.127977, 0.484975, 1.57787, 1.64036, 0.58609],
])

TWO_SOLUTIONS_W1 = np.array([-0.628302, -0.311317, 0.712964])
TWO_SOLUTIONS_W2 = np.array([-0.576837, 0.0266409, 0.816425])
# third real solution reported for the same data
TWO_SOLUTIONS_W3 = np.array([0.747677, -0.246394, 0.616659])

TWO_SOLUTIONS_P = np.array([
    [0.252758, -0.565296, -1.50675, -1.27055, -0.183111],
    [-0.209549, -0.906674, -2.17693, -2.26487, -1.04896],
    [-0.460245, -0.123196, 0.696834, 0.866591, 0.151477],
])

TWO_SOLUTIONS_U = np.array([
    [-0.134482, 0.605848, 0.972423, 0.45865, -0.225455],
    [-0.121519, 0.420599, 1.60726, 1.79853, 0.730092],
    [0.124171, 0.332124, 0.0711503, -0.298093, -0.265324],
])

NEARLY_CIRCULAR_W = np.array([-0.985693, -0.0898144, 0.142629])

# observer positions on Earth, km
NEARLY_CIRCULAR_P = np.array([
    [1519.0, 1143.89, 1519.0, -3092.0, -818.1],
    [-4674.0, -6249.74, -4674.0, 4873.0, 4289.0],
    [4065.13, 557.78, -4065.13, -2715.2, 4649.09],
])

NEARLY_CIRCULAR_U = np.array([
    [-0.15563, -0.379324, -0.372229, 0.811237, 0.618925],
    [0.460986, -0.744255, -0.661444, 0.574661, 0.775925],
    [0.873654, 0.549725, 0.651105, -0.107978, -0.121953],
])


def single_observer() -> Scenario:
    return Scenario.from_columns(
        SINGLE_OBSERVER_P, SINGLE_OBSERVER_U, known_solutions=(SINGLE_OBSERVER_W,)
    )


def two_solutions() -> Scenario:
    return Scenario.from_columns(
        TWO_SOLUTIONS_P, TWO_SOLUTIONS_U, known_solutions=(TWO_SOLUTIONS_W1, TWO_SOLUTIONS_W2)
    )


def nearly_circular() -> Scenario:
    return Scenario.from_columns(
        NEARLY_CIRCULAR_P,
        NEARLY_CIRCULAR_U,
        known_solutions=(NEARLY_CIRCULAR_W,),
        length_unit="km",
    )


ALL = {
    "single_observer": single_observer,
    "two_solutions": two_solutions,
    "nearly_circular": nearly_circular,
}
