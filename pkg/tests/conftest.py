import numpy as np
import pytest

from dcerad.volume import DceSeries, LesionRoi, Mask3D, Volume3D


def make_volume(data, spacing=(1.0, 1.0, 1.0)) -> Volume3D:
    return Volume3D(np.asarray(data, dtype=np.float64), spacing)


def make_mask(data) -> Mask3D:
    return Mask3D(np.asarray(data, dtype=bool))


def uniform_series(dims, phase_values, spacing=(1.0, 1.0, 1.0)) -> DceSeries:
    """Series whose six phases are spatially constant at the given values."""
    phases = tuple(make_volume(np.full(dims, v, dtype=np.float64), spacing)
                   for v in phase_values)
    return DceSeries(phases)


def random_series_and_mask(rng, max_dim=16, spacing=(1.0, 1.0, 1.0)):
    """A random small series plus a nonempty random mask on the same grid."""
    dims = tuple(int(d) for d in rng.integers(2, max_dim + 1, size=3))
    phases = tuple(make_volume(rng.uniform(1.0, 300.0, size=dims), spacing)
                   for _ in range(6))
    mask_data = rng.random(dims) < 0.4
    if not mask_data.any():
        mask_data.flat[int(rng.integers(0, mask_data.size))] = True
    return DceSeries(phases), make_mask(mask_data)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def roi_for(mask: Mask3D, label: str = "malignant") -> LesionRoi:
    return LesionRoi("P0", "L0", mask, label)
