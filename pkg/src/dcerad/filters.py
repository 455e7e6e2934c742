"""Derived images: one-level undecimated Haar wavelet bands and LoG responses.

Wavelet: per axis, low-pass taps (0.5, 0.5) and high-pass taps (0.5, -0.5)
placed at offsets (0, +1), so out[i] = k0*v[i] + k1*v[i+1] with symmetric
(mirror) extension past the last sample.  Band "XYZ" applies the X tap pair
along x, Y along y, Z along z; outputs keep the input dims.

LoG: separable Gaussian with physical sigma (per-axis radius ceil(3*sigma/s),
taps renormalized to unit sum), then the 6-neighbor Laplacian with central
differences scaled by the squared spacing.  Symmetric extension throughout.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveSigma, VolumeTooSmall
from .volume import Volume3D

WAVELET_BANDS = ("LLL", "LLH", "LHL", "HLL", "LHH", "HLH", "HHL", "HHH")

DEFAULT_LOG_SIGMAS_MM = (1.0, 3.0)


@dataclass(frozen=True)
class DerivedImageId:
    """Identifier of one derived image: original, wavelet band, or LoG scale."""

    kind: str                   # "original" | "wavelet" | "log"
    band: str | None = None     # wavelet band, e.g. "LLL"
    sigma_mm: float | None = None

    def __post_init__(self):
        if self.kind == "wavelet" and self.band not in WAVELET_BANDS:
            raise ValueError(f"unknown wavelet band {self.band!r}")
        if self.kind == "log" and (self.sigma_mm is None or self.sigma_mm <= 0):
            raise NonPositiveSigma(f"LoG sigma must be > 0, got {self.sigma_mm}")
        if self.kind not in ("original", "wavelet", "log"):
            raise ValueError(f"unknown derived-image kind {self.kind!r}")

    @property
    def name(self) -> str:
        if self.kind == "original":
            return "original"
        if self.kind == "wavelet":
            return f"wavelet-{self.band}"
        return f"log-sigma-{self.sigma_mm:g}mm"


def default_catalog(log_sigmas_mm=DEFAULT_LOG_SIGMAS_MM) -> tuple[DerivedImageId, ...]:
    """original + 8 wavelet bands + one LoG per sigma (default 11 images)."""
    ids = [DerivedImageId("original")]
    ids += [DerivedImageId("wavelet", band=b) for b in WAVELET_BANDS]
    ids += [DerivedImageId("log", sigma_mm=float(s)) for s in log_sigmas_mm]
    return tuple(ids)


def _haar_pass(data: np.ndarray, axis: int, high: bool) -> np.ndarray:
    """One 2-tap pass along axis; mirror extension supplies the final sample."""
    shifted = np.concatenate(
        [np.take(data, range(1, data.shape[axis]), axis=axis),
         np.take(data, [data.shape[axis] - 1], axis=axis)],
        axis=axis,
    )
    return 0.5 * data - 0.5 * shifted if high else 0.5 * data + 0.5 * shifted


def wavelet_bands(vol: Volume3D) -> dict[str, Volume3D]:
    """All eight one-level bands, keyed by band name, same dims as the input."""
    if min(vol.dims) < 2:
        raise VolumeTooSmall(f"wavelet transform needs every dim >= 2, got {vol.dims}")
    out = {}
    # share the x passes, then y, then z
    x_pass = {c: _haar_pass(vol.data, 0, c == "H") for c in "LH"}
    for cx in "LH":
        y_pass = {c: _haar_pass(x_pass[cx], 1, c == "H") for c in "LH"}
        for cy in "LH":
            for cz in "LH":
                out[cx + cy + cz] = Volume3D(_haar_pass(y_pass[cy], 2, cz == "H"), vol.spacing)
    return out


def _gaussian_taps(sigma_mm: float, spacing: float) -> np.ndarray:
    radius = int(np.ceil(3.0 * sigma_mm / spacing))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64) * spacing
    taps = np.exp(-0.5 * (offsets / sigma_mm) ** 2)
    return taps / taps.sum()


def _conv1d_symmetric(data: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    """Correlate along one axis with symmetric (mirror) boundary extension."""
    radius = (len(taps) - 1) // 2
    pad = [(0, 0)] * 3
    pad[axis] = (radius, radius)
    padded = np.pad(data, pad, mode="symmetric")
    out = np.zeros_like(data)
    n = data.shape[axis]
    for j, w in enumerate(taps):
        out += w * np.take(padded, range(j, j + n), axis=axis)
    return out


def _laplacian(data: np.ndarray, spacing) -> np.ndarray:
    """6-neighbor Laplacian, central differences with mirror extension."""
    out = np.zeros_like(data)
    for axis in range(3):
        padded = np.pad(data, [(1, 1) if a == axis else (0, 0) for a in range(3)],
                        mode="symmetric")
        n = data.shape[axis]
        fwd = np.take(padded, range(2, n + 2), axis=axis)
        bwd = np.take(padded, range(0, n), axis=axis)
        out += (fwd - 2.0 * data + bwd) / spacing[axis] ** 2
    return out


def log_filter(vol: Volume3D, sigma_mm: float) -> Volume3D:
    """Laplacian of Gaussian at a physical scale; dims preserved."""
    if not sigma_mm > 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma_mm}")
    smoothed = vol.data
    for axis in range(3):
        smoothed = _conv1d_symmetric(smoothed, _gaussian_taps(sigma_mm, vol.spacing[axis]), axis)
    return Volume3D(_laplacian(smoothed, vol.spacing), vol.spacing)


def filter_radius_voxels(image_id: DerivedImageId, spacing) -> tuple[int, int, int]:
    """Per-axis input dependency radius of one derived image (for exact crops)."""
    if image_id.kind == "original":
        return (0, 0, 0)
    if image_id.kind == "wavelet":
        return (1, 1, 1)
    return tuple(int(np.ceil(3.0 * image_id.sigma_mm / s)) + 1 for s in spacing)


def derive(vol: Volume3D, image_id: DerivedImageId) -> Volume3D:
    """Dispatch to the identity, one wavelet band, or one LoG response."""
    if image_id.kind == "original":
        return vol
    if image_id.kind == "wavelet":
        return wavelet_bands(vol)[image_id.band]
    return log_filter(vol, image_id.sigma_mm)
