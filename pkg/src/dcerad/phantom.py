"""Synthetic six-phase DCE phantoms with ellipsoidal lesions and known
kinetic-curve composition, for end-to-end validation without clinical data.

Each lesion voxel follows a piecewise-linear six-point curve whose initial and
delayed enhancement land mid-class (slow 30%, medium 75%, fast 150%;
persistent +25%, plateau 0%, washout -25%), so a noise-free phantom classifies
back to its generating types with margin on every threshold.  Voxels draw an
(inflow, outflow) cell from their class mixture, swapped to the other class's
mixture with the heterogeneity probability.  All randomness derives from
(seed, case index), so serial and parallel generation agree.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio import write_manifest, write_raw
from .errors import LesionDoesNotFit
from .volume import BENIGN, MALIGNANT, DceSeries, LesionRoi, Mask3D, Volume3D

INFLOW_TYPES = ("slow", "medium", "fast")
OUTFLOW_TYPES = ("persistent", "plateau", "washout")

IERM_TARGETS_PCT = {"slow": 30.0, "medium": 75.0, "fast": 150.0}
DERM_TARGETS_PCT = {"persistent": 25.0, "plateau": 0.0, "washout": -25.0}

# cell order used for all mixture vectors
CURVE_CELLS = tuple((i, o) for i in INFLOW_TYPES for o in OUTFLOW_TYPES)


def make_mixture(inflow_probs: dict, outflow_probs: dict) -> dict:
    """Product mixture over the 3x3 (inflow, outflow) cells."""
    return {(i, o): inflow_probs[i] * outflow_probs[o] for i, o in CURVE_CELLS}


DEFAULT_BENIGN_MIXTURE = make_mixture(
    {"slow": 0.50, "medium": 0.35, "fast": 0.15},
    {"persistent": 0.70, "plateau": 0.25, "washout": 0.05})
DEFAULT_MALIGNANT_MIXTURE = make_mixture(
    {"slow": 0.10, "medium": 0.30, "fast": 0.60},
    {"persistent": 0.05, "plateau": 0.25, "washout": 0.70})


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int] = (64, 64, 64)
    spacing: tuple[float, float, float] = (0.93, 0.93, 0.5)
    semi_axes_mm: tuple[float, float, float] = (6.0, 5.0, 4.0)
    baseline: float = 100.0
    noise_std: float = 5.0
    heterogeneity: float = 0.2
    benign_mixture: dict = field(default_factory=lambda: dict(DEFAULT_BENIGN_MIXTURE))
    malignant_mixture: dict = field(default_factory=lambda: dict(DEFAULT_MALIGNANT_MIXTURE))
    seed: int = 0

    def __post_init__(self):
        for mixture in (self.benign_mixture, self.malignant_mixture):
            if set(mixture) != set(CURVE_CELLS):
                raise ValueError("mixture must cover all 9 (inflow, outflow) cells")
            if abs(sum(mixture.values()) - 1.0) > 1e-9:
                raise ValueError("mixture probabilities must sum to 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if not 0.0 <= self.heterogeneity <= 1.0:
            raise ValueError("heterogeneity must be in [0, 1]")
        if self.baseline <= 0:
            raise ValueError("baseline must be > 0")
        if any(a <= 0 for a in self.semi_axes_mm):
            raise ValueError("semi-axes must be > 0")
        for axis in range(3):
            extent = (self.dims[axis] - 1) * self.spacing[axis]
            if 2 * self.semi_axes_mm[axis] >= extent:
                raise LesionDoesNotFit(
                    f"semi-axis {self.semi_axes_mm[axis]} mm does not fit in the "
                    f"{extent:.1f} mm grid extent on axis {axis}")


def kinetic_curve(inflow: str, outflow: str, baseline: float) -> np.ndarray:
    """Six intensities C0..C5: baseline, mid-class peak at phase 1, linear to a
    mid-class delayed endpoint at phase 5."""
    if baseline <= 0:
        raise ValueError("baseline must be > 0")
    c1 = baseline * (1.0 + IERM_TARGETS_PCT[inflow] / 100.0)
    c5 = c1 * (1.0 + DERM_TARGETS_PCT[outflow] / 100.0)
    phases = np.empty(6)
    phases[0] = baseline
    for k in range(1, 6):
        phases[k] = c1 + (c5 - c1) * (k - 1) / 4.0
    return phases


def _ellipsoid_mask(dims, spacing, center_mm, semi_axes_mm) -> np.ndarray:
    grids = np.meshgrid(*(np.arange(n) * s for n, s in zip(dims, spacing)),
                        indexing="ij")
    r2 = sum(((g - c) / a) ** 2 for g, c, a in zip(grids, center_mm, semi_axes_mm))
    return r2 <= 1.0


def generate_case(spec: PhantomSpec, label: str, case_index: int,
                  patient_id: str | None = None, lesion_id: str | None = None
                  ) -> tuple[DceSeries, LesionRoi]:
    """One deterministic phantom case; randomness comes from (seed, case_index)."""
    rng = np.random.default_rng((spec.seed, case_index))
    center = []
    for axis in range(3):
        extent = (spec.dims[axis] - 1) * spec.spacing[axis]
        lo = spec.semi_axes_mm[axis]
        hi = extent - spec.semi_axes_mm[axis]
        if lo > hi:
            raise LesionDoesNotFit(f"no room for the lesion on axis {axis}")
        center.append(rng.uniform(lo, hi))
    mask_data = _ellipsoid_mask(spec.dims, spec.spacing, center, spec.semi_axes_mm)
    if not mask_data.any():
        raise LesionDoesNotFit("ellipsoid does not cover any voxel center")
    mask = Mask3D(mask_data)
    n_mask = int(mask_data.sum())

    own = spec.benign_mixture if label == BENIGN else spec.malignant_mixture
    other = spec.malignant_mixture if label == BENIGN else spec.benign_mixture
    p_own = np.array([own[c] for c in CURVE_CELLS])
    p_other = np.array([other[c] for c in CURVE_CELLS])
    p_mix = (1.0 - spec.heterogeneity) * p_own + spec.heterogeneity * p_other
    cells = rng.choice(len(CURVE_CELLS), size=n_mask, p=p_mix / p_mix.sum())

    curve_table = np.stack([kinetic_curve(i, o, spec.baseline) for i, o in CURVE_CELLS])
    flat_mask = mask.flat()
    phases = []
    for k in range(6):
        flat = np.full(int(np.prod(spec.dims)), spec.baseline)
        flat[flat_mask] = curve_table[cells, k]
        if spec.noise_std > 0:
            flat = flat + rng.normal(0.0, spec.noise_std, size=flat.shape[0])
        phases.append(Volume3D.from_flat(spec.dims, spec.spacing, flat))

    patient_id = patient_id if patient_id is not None else f"P{case_index:04d}"
    lesion_id = lesion_id if lesion_id is not None else "L1"
    roi = LesionRoi(patient_id, lesion_id, mask, label)
    return DceSeries(tuple(phases)), roi


def _assign_patients(n_cases: int, first_patient: int = 0
                     ) -> tuple[list[tuple[str, str]], int]:
    """(patient_id, lesion_id) pairs with patient sizes cycling 1, 2, 1, 2, ...
    (~1.5 lesions per patient); returns the pairs and the next patient number."""
    out = []
    patient = first_patient
    i = 0
    while i < n_cases:
        size = 1 if (patient - first_patient) % 2 == 0 else 2
        for lesion in range(1, size + 1):
            if i >= n_cases:
                break
            out.append((f"P{patient:04d}", f"L{lesion}"))
            i += 1
        patient += 1
    return out, patient


def generate_corpus(spec: PhantomSpec, n_cases: int, class_balance: float,
                    out_dir) -> Path:
    """Write raw volumes, masks and a manifest; returns the manifest path.

    class_balance is the malignant fraction; on fractional splits the benign
    class gets the extra case.  Rerunning with identical arguments reproduces
    identical bytes.
    """
    if not 0.0 <= class_balance <= 1.0:
        raise ValueError("class balance must be in [0, 1]")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_malignant = int(np.floor(n_cases * class_balance))
    labels = [BENIGN] * (n_cases - n_malignant) + [MALIGNANT] * n_malignant

    ids_benign, next_patient = _assign_patients(n_cases - n_malignant)
    ids_malignant, _ = _assign_patients(n_malignant, first_patient=next_patient)
    ids = ids_benign + ids_malignant

    manifest_rows = []
    for i, label in enumerate(labels):
        patient_id, lesion_id = ids[i]
        series, roi = generate_case(spec, label, i, patient_id, lesion_id)
        phase_names = [f"case{i:04d}_c{k}.raw" for k in range(6)]
        mask_name = f"case{i:04d}_mask.raw"
        for k, name in enumerate(phase_names):
            write_raw(out_dir / name, series.phases[k], "f32")
        write_raw(out_dir / mask_name,
                  Volume3D(roi.mask.data.astype(np.float64), spec.spacing), "f32")
        manifest_rows.append((patient_id, lesion_id, phase_names, mask_name, label))
    manifest_path = out_dir / "manifest.txt"
    write_manifest(manifest_path, manifest_rows)
    return manifest_path
