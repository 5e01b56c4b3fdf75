"""Shared fixtures: meshes and curvature are expensive, so one session
cache hands out lazily built (lambda, level) sphere data to every test."""

import numpy as np
import pytest

from lambdalab.mesh import icosphere, sphere_radius
from lambdalab.curvature import curvature


class SphereBank:
    def __init__(self):
        self._meshes = {}
        self._curvs = {}

    def mesh(self, lam, level):
        key = (float(lam), int(level))
        if key not in self._meshes:
            self._meshes[key] = icosphere(sphere_radius(lam), level)
        return self._meshes[key]

    def curv(self, lam, level):
        key = (float(lam), int(level))
        if key not in self._curvs:
            self._curvs[key] = curvature(self.mesh(lam, level))
        return self._curvs[key]


@pytest.fixture(scope="session")
def bank():
    return SphereBank()


@pytest.fixture(scope="session")
def shrinker(bank):
    """The radius-2 self-shrinking sphere at level 3."""
    return bank.mesh(0.0, 3)


@pytest.fixture(scope="session")
def shrinker_curv(bank):
    return bank.curv(0.0, 3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(987123)


@pytest.fixture(scope="session")
def curve_circle():
    from lambdalab.shooting import shoot_closed_curve
    return shoot_closed_curve(0.0, guess=1.41)


@pytest.fixture(scope="session")
def curve_rosette():
    from lambdalab.shooting import shoot_closed_curve
    return shoot_closed_curve(-0.5, guess=0.5755)


@pytest.fixture(scope="session")
def revolved_sphere():
    from lambdalab.shooting import shoot_revolution
    return shoot_revolution(0.5, "sphere_like", guess=1.56, level=2)


@pytest.fixture(scope="session")
def shrinker_torus():
    from lambdalab.shooting import shoot_revolution
    return shoot_revolution(0.0, "torus_like", guess=0.44, level=2)
