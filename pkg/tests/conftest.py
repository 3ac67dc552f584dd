import pytest

from ahlfors_lab.lattice_locus import (LatticeConfig, RadiiSchedule, build_zero_locus, empty_locus,
                                       marked_points)
from ahlfors_lab.surface_geometry import SurfaceModel


@pytest.fixture(scope="session")
def cfg():
    return LatticeConfig(5)


@pytest.fixture(scope="session")
def locus(cfg):
    """Two annuli r = 40, 160 with labels 1 and 3 (offset case I on both)."""
    return build_zero_locus(RadiiSchedule.desk(5, 2, labels=(1, 3)), None, cfg)


@pytest.fixture(scope="session")
def model(locus):
    return SurfaceModel(0.05, 4, 0.1, locus)


@pytest.fixture(scope="session")
def empty_model():
    return SurfaceModel(0.05, 4, 0.1, empty_locus(5))


@pytest.fixture(scope="session")
def ys():
    return marked_points(16)


@pytest.fixture(scope="session")
def top_zeros(locus):
    import numpy as np

    idx = np.nonzero(locus.annulus == locus.labels[-1])[0]
    return idx[np.linspace(0, len(idx) - 1, 5).astype(int)]
