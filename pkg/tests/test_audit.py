import numpy as np
import pytest

from anthrofit import audit
from anthrofit.errors import IndexOutOfRange, TooFewSamples


def test_two_point_hand_computation():
    samples = {"p1": np.array([[90.0], [110.0]])}
    report = audit.consistency_stats(samples, names=("waist_circ",))
    stats = report.per_measurement["waist_circ"]
    assert stats.sigma_cm == pytest.approx(np.sqrt(200.0) * 0.1)
    assert stats.rel_sigma_percent == pytest.approx(np.sqrt(200.0) / 100.0 * 100.0)
    assert stats.rel_range_percent == pytest.approx(20.0)
    assert report.persons_covered == 1
    assert report.frames_covered == 2


def test_identical_samples_all_zero():
    samples = {"a": np.tile([[50.0, 70.0]], (5, 1)), "b": np.tile([[40.0, 60.0]], (3, 1))}
    report = audit.consistency_stats(samples, names=("x", "y"))
    for stats in report.per_measurement.values():
        assert stats.sigma_cm == 0.0
        assert stats.rel_sigma_percent == 0.0
        assert stats.rel_range_percent == 0.0


def test_left_right_pairs_averaged():
    samples = {"p": np.array([[100.0, 200.0], [120.0, 200.0]])}
    report = audit.consistency_stats(samples, names=("thigh_r", "thigh_l"))
    assert list(report.per_measurement.keys()) == ["thigh"]
    right = np.array([100.0, 120.0])
    sig_r = right.std(ddof=1)
    expected_sigma_cm = 0.5 * (sig_r + 0.0) * 0.1
    assert report.per_measurement["thigh"].sigma_cm == pytest.approx(expected_sigma_cm)


def test_person_averaging():
    samples = {
        "a": np.array([[90.0], [110.0]]),
        "b": np.array([[200.0], [200.0]]),
    }
    report = audit.consistency_stats(samples, names=("waist",))
    sig_a = np.sqrt(200.0)
    assert report.per_measurement["waist"].sigma_cm == pytest.approx(0.5 * sig_a * 0.1)


def test_permutation_invariance():
    rng = np.random.default_rng(4)
    frames = rng.uniform(50, 150, size=(10, 3))
    a = audit.consistency_stats({"p": frames}, names=("a", "b", "c"))
    b = audit.consistency_stats({"p": frames[::-1]}, names=("a", "b", "c"))
    for n in a.per_measurement:
        assert a.per_measurement[n].sigma_cm == pytest.approx(b.per_measurement[n].sigma_cm)


def test_scale_invariance_of_relative_stats():
    rng = np.random.default_rng(5)
    frames = rng.uniform(50, 150, size=(8, 2))
    a = audit.consistency_stats({"p": frames}, names=("a", "b"))
    b = audit.consistency_stats({"p": frames * 7.5}, names=("a", "b"))
    for n in a.per_measurement:
        assert a.per_measurement[n].rel_sigma_percent == pytest.approx(
            b.per_measurement[n].rel_sigma_percent, rel=1e-12)
        assert a.per_measurement[n].rel_range_percent == pytest.approx(
            b.per_measurement[n].rel_range_percent, rel=1e-12)


def test_beta_sigma_mean():
    samples = {"p": np.array([[0.0, 1.0], [2.0, 1.0]])}
    report = audit.consistency_stats(samples, kind="betas")
    assert report.beta_sigma_mean == pytest.approx(0.5 * np.sqrt(2.0))
    assert report.per_measurement == {}


def test_too_few_samples():
    with pytest.raises(TooFewSamples):
        audit.consistency_stats({"p": np.ones((1, 3))})
    with pytest.raises(TooFewSamples):
        audit.consistency_stats({})


def test_bone_lengths():
    kp = np.array([[0.0, 0, 0], [0.0, 0.4, 0], [0.0, 0.4, 0]])
    lengths = audit.bone_lengths(kp, [(0, 1), (1, 2)], names=["shin", "zero"])
    assert lengths["shin"] == pytest.approx(40.0)
    assert lengths["zero"] == 0.0
    with pytest.raises(IndexOutOfRange):
        audit.bone_lengths(kp, [(0, 9)])


def test_bone_lengths_fixture_table():
    rng = np.random.default_rng(6)
    kp = rng.uniform(-1, 1, size=(17, 3))
    pairs = [(0, 1), (1, 2), (2, 3), (5, 11)]
    got = audit.bone_lengths(kp, pairs)
    for (a, b) in pairs:
        assert got[f"bone_{a}_{b}"] == pytest.approx(
            float(np.linalg.norm(kp[a] - kp[b])) * 100.0)


def test_table_layout():
    samples = {"p": np.array([[90.0, 50.0], [110.0, 50.0]])}
    report = audit.consistency_stats(samples, names=("head", "forearm"))
    table = report.format_table()
    assert "Measure" in table and "r. sigma" in table and "r. range" in table
    assert "head" in table and "forearm" in table


def test_csv_jsonl_ingestion(tmp_path):
    csv_path = tmp_path / "s.csv"
    csv_path.write_text("person_id,a,b\np1,1.0,2.0\np1,3.0,4.0\np2,5.0,6.0\np2,7.0,8.0\n")
    samples, names = audit.load_samples_csv(csv_path)
    assert names == ("a", "b")
    assert samples["p1"].shape == (2, 2)

    jsonl_path = tmp_path / "s.jsonl"
    jsonl_path.write_text(
        '{"person_id": "p1", "values": {"a": 1.0, "b": 2.0}}\n'
        '{"person_id": "p1", "values": {"a": 3.0, "b": 4.0}}\n')
    samples, names = audit.load_samples_jsonl(jsonl_path)
    assert names == ("a", "b")
    np.testing.assert_array_equal(samples["p1"], [[1.0, 2.0], [3.0, 4.0]])
