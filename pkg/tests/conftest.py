from __future__ import annotations

import numpy as np
import pytest

from iodsub import fixtures
from iodsub.mastermap import NonEvaluable


class LinearMap:
    """Stand-in for a TriangleMap with ``F(z) = A (z - z*)``."""

    def __init__(self, a, zstar):
        self.a = np.asarray(a, dtype=float)
        self.zstar = np.asarray(zstar, dtype=float)
        self.solves = 0

    def F(self, z):
        self.solves += 1
        return self.a @ (np.asarray(z, dtype=float) - self.zstar)

    def J(self, z):
        return self.a


class QuadraticGradientMap(LinearMap):
    """``F(z) = z - z*``; ``|F|^2`` is the isotropic quadratic."""

    def __init__(self, zstar):
        super().__init__(np.eye(2), zstar)


class RaisingMap:
    def F(self, z):
        raise NonEvaluable("solve", "test")

    J = F


@pytest.fixture(params=sorted(fixtures.ALL))
def scenario(request):
    return fixtures.ALL[request.param]()


@pytest.fixture
def single():
    return fixtures.single_observer()


@pytest.fixture
def nearly_circular():
    return fixtures.nearly_circular()
