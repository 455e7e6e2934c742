import numpy as np
import pytest

from dcerad import dataio, kinetics
from dcerad.errors import LesionDoesNotFit
from dcerad.phantom import (CURVE_CELLS, PhantomSpec, generate_case, generate_corpus,
                            kinetic_curve, make_mixture)
from dcerad.volume import DceSeries, LesionRoi, Mask3D, Volume3D, voxel_count


def pure_mixture(inflow, outflow):
    return make_mixture({t: 1.0 if t == inflow else 0.0
                         for t in ("slow", "medium", "fast")},
                        {t: 1.0 if t == outflow else 0.0
                         for t in ("persistent", "plateau", "washout")})


def quiet_spec(**kwargs):
    defaults = dict(noise_std=0.0, heterogeneity=0.0)
    defaults.update(kwargs)
    return PhantomSpec(**defaults)


def test_curve_fast_washout():
    c = kinetic_curve("fast", "washout", 100.0)
    assert c[0] == 100.0
    assert c[1] == 250.0
    assert c[5] == 187.5


def test_curve_slow_persistent():
    c = kinetic_curve("slow", "persistent", 100.0)
    assert c[1] == pytest.approx(130.0)
    assert c[5] == pytest.approx(162.5)


def test_curve_linear_between_phases():
    c = kinetic_curve("medium", "plateau", 80.0)
    steps = np.diff(c[1:])
    assert np.allclose(steps, steps[0])


@pytest.mark.parametrize("inflow,outflow", CURVE_CELLS)
def test_curves_classify_back_to_their_cell(inflow, outflow):
    """Every generated curve lands strictly inside its class boundaries."""
    c = kinetic_curve(inflow, outflow, 100.0)
    phases = tuple(Volume3D(np.full((1, 1, 1), v), (1, 1, 1)) for v in c)
    series = DceSeries(phases)
    roi = LesionRoi("p", "l", Mask3D(np.ones((1, 1, 1), dtype=bool)), "benign")
    feats = kinetics.extract_dynamic_features(series, roi)
    ratios = {"slow": feats.slow_ratio, "medium": feats.medium_ratio,
              "fast": feats.fast_ratio, "persistent": feats.persistent_ratio,
              "plateau": feats.plateau_ratio, "washout": feats.washout_ratio}
    assert ratios[inflow] == 100.0
    assert ratios[outflow] == 100.0


def test_generate_case_pure_fast_washout():
    spec = quiet_spec(malignant_mixture=pure_mixture("fast", "washout"))
    series, roi = generate_case(spec, "malignant", 0)
    feats = kinetics.extract_dynamic_features(series, roi)
    assert feats.fast_ratio == 100.0
    assert feats.washout_ratio == 100.0


def test_generate_case_deterministic():
    spec = PhantomSpec(seed=11)
    a_series, a_roi = generate_case(spec, "benign", 3)
    b_series, b_roi = generate_case(spec, "benign", 3)
    for pa, pb in zip(a_series.phases, b_series.phases):
        np.testing.assert_array_equal(pa.data, pb.data)
    np.testing.assert_array_equal(a_roi.mask.data, b_roi.mask.data)


def test_generate_case_heterogeneity_fraction():
    spec = quiet_spec(heterogeneity=0.3,
                      benign_mixture=pure_mixture("slow", "persistent"),
                      malignant_mixture=pure_mixture("fast", "washout"))
    series, roi = generate_case(spec, "benign", 5)
    n = voxel_count(roi.mask)
    assert n >= 1000
    feats = kinetics.extract_dynamic_features(series, roi)
    assert feats.fast_ratio / 100.0 == pytest.approx(0.3, abs=0.05)
    assert feats.washout_ratio / 100.0 == pytest.approx(0.3, abs=0.05)


def test_lesion_must_fit():
    with pytest.raises(LesionDoesNotFit):
        PhantomSpec(dims=(16, 16, 16), semi_axes_mm=(20.0, 5.0, 4.0))


def test_corpus_balance(tmp_path):
    spec = PhantomSpec(dims=(16, 16, 24), spacing=(1.0, 1.0, 1.0),
                       semi_axes_mm=(4.0, 3.5, 3.0), seed=2)
    manifest = generate_corpus(spec, 10, 0.5, tmp_path / "corpus")
    records = dataio.load_manifest(manifest)
    labels = [r.label for r in records]
    assert labels.count("benign") == 5
    assert labels.count("malignant") == 5


def test_corpus_benign_gets_extra_case(tmp_path):
    spec = PhantomSpec(dims=(16, 16, 24), spacing=(1.0, 1.0, 1.0),
                       semi_axes_mm=(4.0, 3.5, 3.0), seed=2)
    manifest = generate_corpus(spec, 7, 0.5, tmp_path / "corpus")
    labels = [r.label for r in dataio.load_manifest(manifest)]
    assert labels.count("benign") == 4
    assert labels.count("malignant") == 3


def test_corpus_regeneration_identical_bytes(tmp_path):
    spec = PhantomSpec(dims=(12, 12, 16), spacing=(1.0, 1.0, 1.0),
                       semi_axes_mm=(3.0, 2.5, 2.5), seed=4)
    m1 = generate_corpus(spec, 4, 0.5, tmp_path / "a")
    m2 = generate_corpus(spec, 4, 0.5, tmp_path / "b")
    files1 = sorted(p.name for p in (tmp_path / "a").iterdir())
    files2 = sorted(p.name for p in (tmp_path / "b").iterdir())
    assert files1 == files2
    for name in files1:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_corpus_patient_grouping(tmp_path):
    spec = PhantomSpec(dims=(16, 16, 24), spacing=(1.0, 1.0, 1.0),
                       semi_axes_mm=(4.0, 3.5, 3.0), seed=2)
    manifest = generate_corpus(spec, 12, 0.5, tmp_path / "corpus")
    records = dataio.load_manifest(manifest)
    patients = {}
    for r in records:
        patients.setdefault(r.patient_id, []).append(r.label)
    # sizes cycle 1,2 per class: average ~1.5 lesions/patient
    assert 12 / len(patients) == pytest.approx(1.5, abs=0.3)
    for labels in patients.values():
        assert len(set(labels)) == 1          # patients are label-pure by construction


def test_corpus_loads_back(tmp_path):
    spec = PhantomSpec(dims=(12, 12, 16), spacing=(1.0, 1.0, 1.0),
                       semi_axes_mm=(3.0, 2.5, 2.5), seed=8)
    manifest = generate_corpus(spec, 2, 0.5, tmp_path / "c")
    records = dataio.load_manifest(manifest)
    series, roi = dataio.load_lesion(records[0])
    assert series.dims == (12, 12, 16)
    assert voxel_count(roi.mask) > 0


def test_mixture_validation():
    bad = dict(pure_mixture("fast", "washout"))
    bad[("fast", "washout")] = 0.5
    with pytest.raises(ValueError):
        PhantomSpec(malignant_mixture=bad)
