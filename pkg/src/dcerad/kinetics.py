"""Kinetic-curve (dynamic) features from a six-phase DCE series.

The enhancement-rate maps and six type ratios follow the voxel-to-voxel
definitions

    IERM = (C_peak - C0) / C0 * 100%      (initial enhancement rate)
    DERM = (C5 - C_peak) / C_peak * 100%  (delayed enhancement rate)

with the type boundaries

    initial:  slow < 50 <= medium <= 100 < fast
    delayed:  washout < -10 <= plateau <= 10 < persistent

The peak phase C_peak is C1 or C2, whichever has the larger mean intensity
inside the tumor mask (ties go to C1).

Near-zero denominators are handled deterministically.  With
eps = 1e-6 * max(max C0 over mask, 1):

* IERM voxels with C0 <= eps get a forced label (fast when C_peak > eps,
  else slow) and are excluded from the PE aggregates and FTV;
* DERM voxels with C_peak <= eps are forced plateau and excluded from
  aggregates;
* SER = (C_peak - C0) / (C5 - C0) is only defined where |C5 - C0| > eps,
  and negative values are clamped to 0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyMap, EmptyMask, WrongMapKind
from .volume import DceSeries, LesionRoi, Mask3D, masked_values, voxel_count, voxel_volume_mm3

INITIAL_TYPES = ("slow", "medium", "fast")
DELAYED_TYPES = ("persistent", "plateau", "washout")

SLOW, MEDIUM, FAST = 0, 1, 2
PERSISTENT, PLATEAU, WASHOUT = 0, 1, 2

DYNAMIC_FEATURE_NAMES = (
    "slow_ratio", "medium_ratio", "fast_ratio",
    "persistent_ratio", "plateau_ratio", "washout_ratio",
    "average_pe", "peak_pe",
    "average_ser", "peak_ser",
    "ftv_mm3",
)

DEFAULT_FTV_THRESHOLD_PCT = 70.0


@dataclass(frozen=True)
class RateMap:
    """Per-tumor-voxel scalar map in the canonical x-fastest in-mask order.

    ``values[i]`` is meaningful where ``valid[i]``; invalid voxels carry a
    forced label in ``override`` (-1 where unused).  kind is "initial",
    "delayed" or "ser".
    """

    kind: str
    mask: Mask3D
    values: np.ndarray       # float64, len == voxel_count(mask)
    valid: np.ndarray        # bool, same length
    override: np.ndarray     # int8, -1 where valid


@dataclass(frozen=True)
class DynamicFeatures:
    slow_ratio: float
    medium_ratio: float
    fast_ratio: float
    persistent_ratio: float
    plateau_ratio: float
    washout_ratio: float
    average_pe: float
    peak_pe: float
    average_ser: float
    peak_ser: float
    ftv_mm3: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in DYNAMIC_FEATURE_NAMES], dtype=np.float64)


def _check_pair(series: DceSeries, mask: Mask3D):
    if series.dims != mask.dims:
        raise DimensionMismatch(f"series dims {series.dims} != mask dims {mask.dims}")


def _epsilon(c0_in_mask: np.ndarray) -> float:
    return 1e-6 * max(float(c0_in_mask.max()), 1.0)


def select_peak_phase(series: DceSeries, mask: Mask3D) -> int:
    """Peak enhancement phase index: 1 or 2, by mask-mean intensity; ties -> 1."""
    _check_pair(series, mask)
    if voxel_count(mask) == 0:
        raise EmptyMask("peak phase selection needs a nonempty mask")
    m1 = float(masked_values(series.phases[1], mask).mean())
    m2 = float(masked_values(series.phases[2], mask).mean())
    return 1 if m1 >= m2 else 2


def compute_ierm(series: DceSeries, mask: Mask3D, peak: int) -> RateMap:
    """Initial enhancement rate map, percent, over tumor voxels."""
    _check_pair(series, mask)
    if voxel_count(mask) == 0:
        raise EmptyMask("IERM needs a nonempty mask")
    c0 = masked_values(series.phases[0], mask)
    cp = masked_values(series.phases[peak], mask)
    eps = _epsilon(c0)
    valid = c0 > eps
    values = np.zeros_like(c0)
    values[valid] = (cp[valid] - c0[valid]) / c0[valid] * 100.0
    override = np.full(c0.shape, -1, dtype=np.int8)
    override[~valid] = np.where(cp[~valid] > eps, FAST, SLOW)
    return RateMap("initial", mask, values, valid, override)


def compute_derm(series: DceSeries, mask: Mask3D, peak: int) -> RateMap:
    """Delayed enhancement rate map, percent, over tumor voxels."""
    _check_pair(series, mask)
    if voxel_count(mask) == 0:
        raise EmptyMask("DERM needs a nonempty mask")
    c0 = masked_values(series.phases[0], mask)
    cp = masked_values(series.phases[peak], mask)
    c5 = masked_values(series.phases[5], mask)
    eps = _epsilon(c0)
    valid = cp > eps
    values = np.zeros_like(cp)
    values[valid] = (c5[valid] - cp[valid]) / cp[valid] * 100.0
    override = np.full(cp.shape, -1, dtype=np.int8)
    override[~valid] = PLATEAU
    return RateMap("delayed", mask, values, valid, override)


def classify_initial(ierm: RateMap) -> np.ndarray:
    """Per-voxel initial type: 0 slow, 1 medium, 2 fast (boundaries -> medium)."""
    if ierm.kind != "initial":
        raise WrongMapKind(f"expected an initial map, got {ierm.kind!r}")
    v = ierm.values
    labels = np.where(v < 50.0, SLOW, np.where(v > 100.0, FAST, MEDIUM)).astype(np.int8)
    forced = ierm.override >= 0
    labels[forced] = ierm.override[forced]
    return labels


def classify_delayed(derm: RateMap) -> np.ndarray:
    """Per-voxel delayed type: 0 persistent, 1 plateau, 2 washout (+-10 -> plateau)."""
    if derm.kind != "delayed":
        raise WrongMapKind(f"expected a delayed map, got {derm.kind!r}")
    v = derm.values
    labels = np.where(v > 10.0, PERSISTENT, np.where(v < -10.0, WASHOUT, PLATEAU)).astype(np.int8)
    forced = derm.override >= 0
    labels[forced] = derm.override[forced]
    return labels


def type_ratios(labels: np.ndarray, mask: Mask3D) -> tuple[float, float, float]:
    """Percent of tumor voxels per type, in type-index order; sums to 100."""
    n = voxel_count(mask)
    if n == 0:
        raise EmptyMask("type ratios need a nonempty mask")
    if labels.shape[0] != n:
        raise DimensionMismatch(f"{labels.shape[0]} labels for {n} tumor voxels")
    counts = np.bincount(labels, minlength=3)
    return tuple(float(c) / n * 100.0 for c in counts[:3])


def pe_aggregates(ierm: RateMap) -> tuple[float, float]:
    """(peak PE, average PE) over voxels with a defined enhancement quotient."""
    v = ierm.values[ierm.valid]
    if v.size == 0:
        raise EmptyMap("no voxel has a defined percent enhancement")
    return float(v.max()), float(v.mean())


def ser_map(series: DceSeries, mask: Mask3D, peak: int) -> RateMap:
    """Signal enhancement ratio map; defined where |C5 - C0| > eps, clamped >= 0."""
    _check_pair(series, mask)
    if voxel_count(mask) == 0:
        raise EmptyMask("SER needs a nonempty mask")
    c0 = masked_values(series.phases[0], mask)
    cp = masked_values(series.phases[peak], mask)
    c5 = masked_values(series.phases[5], mask)
    eps = _epsilon(c0)
    valid = np.abs(c5 - c0) > eps
    values = np.zeros_like(c0)
    values[valid] = np.maximum((cp[valid] - c0[valid]) / (c5[valid] - c0[valid]), 0.0)
    override = np.full(c0.shape, -1, dtype=np.int8)
    return RateMap("ser", mask, values, valid, override)


def ser_aggregates(ser: RateMap) -> tuple[float, float]:
    """(peak SER, average SER); both 0 when no voxel is defined."""
    v = ser.values[ser.valid]
    if v.size == 0:
        return 0.0, 0.0
    return float(v.max()), float(v.mean())


def functional_tumor_volume(ierm: RateMap, vol_mm3_per_voxel: float,
                            pe_threshold_pct: float = DEFAULT_FTV_THRESHOLD_PCT) -> float:
    """Physical volume of defined voxels whose enhancement meets the threshold."""
    v = ierm.values[ierm.valid]
    return float(np.count_nonzero(v >= pe_threshold_pct)) * vol_mm3_per_voxel


def extract_dynamic_features(series: DceSeries, roi: LesionRoi,
                             ftv_threshold_pct: float = DEFAULT_FTV_THRESHOLD_PCT) -> DynamicFeatures:
    """All 11 dynamic features for one lesion."""
    mask = roi.mask
    peak = select_peak_phase(series, mask)
    ierm = compute_ierm(series, mask, peak)
    derm = compute_derm(series, mask, peak)
    slow, medium, fast = type_ratios(classify_initial(ierm), mask)
    persistent, plateau, washout = type_ratios(classify_delayed(derm), mask)
    peak_pe, average_pe = pe_aggregates(ierm)
    peak_ser, average_ser = ser_aggregates(ser_map(series, mask, peak))
    ftv = functional_tumor_volume(ierm, voxel_volume_mm3(series.phases[0]), ftv_threshold_pct)
    return DynamicFeatures(
        slow_ratio=slow, medium_ratio=medium, fast_ratio=fast,
        persistent_ratio=persistent, plateau_ratio=plateau, washout_ratio=washout,
        average_pe=average_pe, peak_pe=peak_pe,
        average_ser=average_ser, peak_ser=peak_ser,
        ftv_mm3=ftv,
    )
