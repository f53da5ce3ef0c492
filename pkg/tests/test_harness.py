import csv
import io
import json
import math

import numpy as np
import pytest

from annulus_lab import harness
from annulus_lab.circle import CircleGrid
from annulus_lab.compactness import covering_number
from annulus_lab.harness import (ConfigError, ExperimentConfig, compute_verdicts, load_report, run,
                                 verify_report, worker_count, write_report)
from annulus_lab.laurent import LaurentSeq
from annulus_lab.spaces import SpaceSpec


def small(experiment, **kw):
    base = {
        "zeon": dict(grid_size=1024, sample_count=6, search_samples=2, search_budget=20),
        "diag": dict(grid_size=4096, sample_count=2, zeta_degrees=(1,)),
        "threecircles": dict(grid_size=2048, sample_count=200),
        "ikar": dict(grid_size=2048, sample_count=4, zeta_degrees=(1, 2)),
    }[experiment]
    base["seed"] = 7
    base.update(kw)
    return ExperimentConfig(experiment=experiment, **base)


@pytest.fixture(scope="module")
def zeon_report():
    return run(small("zeon"))


@pytest.fixture(scope="module")
def diag_report():
    return harness._finish(*_diag_parts())


def _diag_parts():
    cfg = small("diag").validate()
    rep = harness.run_diag(cfg, pair_samples=16)
    return cfg, rep.records, rep.summary, rep.curves


@pytest.fixture(scope="module")
def three_report():
    return run(small("threecircles"))


class TestConfig:
    @pytest.mark.parametrize("theta", [0.0, 1.0, -0.2, 1.5])
    def test_theta_outside_open_interval(self, theta):
        with pytest.raises(ConfigError):
            small("zeon", theta=theta).validate()

    def test_grid_below_64_times_degree(self):
        with pytest.raises(ConfigError):
            small("zeon", grid_size=256).validate()
        with pytest.raises(ConfigError):
            small("diag", grid_size=2048).validate()
        with pytest.raises(ConfigError):
            small("ikar", grid_size=4096, zeta_degrees=(2, 128)).validate()

    @pytest.mark.parametrize("kw", [dict(sample_count=0), dict(zeta_degrees=()), dict(zeta_degrees=(-1,)),
                                    dict(grid_size=1025), dict(search_budget=-1)])
    def test_other_errors(self, kw):
        with pytest.raises(ConfigError):
            small("zeon", **kw).validate()

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(experiment="nope", sample_count=1).validate()

    def test_defaults(self):
        cfg = ExperimentConfig(experiment="ikar")
        assert (cfg.theta, cfg.grid_size, cfg.sample_count) == (0.5, 4096, 500)
        assert cfg.zeta_degrees == (2, 4, 8, 16)
        cfg.validate()


class TestWorkers:
    def test_env_caps_pool(self, monkeypatch):
        monkeypatch.setenv(harness.THREADS_ENV, "3")
        assert worker_count() == 3

    def test_unset_uses_cpus(self, monkeypatch):
        monkeypatch.delenv(harness.THREADS_ENV, raising=False)
        assert worker_count() >= 1

    @pytest.mark.parametrize("raw", ["0", "-2", "two", ""])
    def test_bad_values(self, monkeypatch, raw):
        monkeypatch.setenv(harness.THREADS_ENV, raw)
        with pytest.raises(ConfigError):
            worker_count()

    def test_parallel_map_keeps_order(self, monkeypatch):
        monkeypatch.setenv(harness.THREADS_ENV, "4")
        assert harness.parallel_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]


class TestDeterminism:
    def test_rerun_identical(self, zeon_report):
        again = run(small("zeon"))
        assert json.dumps(again.numeric_dict()) == json.dumps(zeon_report.numeric_dict())

    def test_worker_count_irrelevant(self, monkeypatch, three_report):
        monkeypatch.setenv(harness.THREADS_ENV, "3")
        threaded = run(small("threecircles"))
        assert json.dumps(threaded.numeric_dict()) == json.dumps(three_report.numeric_dict())

    def test_seed_matters(self, zeon_report):
        other = run(small("zeon", seed=8))
        assert other.records[2]["fc_norm"] != zeon_report.records[2]["fc_norm"]

    def test_sample_rng_keyed(self):
        a = harness.sample_rng(1, 2, 3).random(4)
        assert np.array_equal(a, harness.sample_rng(1, 2, 3).random(4))
        assert not np.array_equal(a, harness.sample_rng(1, 2, 4).random(4))


class TestZeon:
    def test_closed_form_samples(self, zeon_report):
        d0, d3 = zeon_report.records[0], zeon_report.records[1]
        assert d0["label"] == "delta_0" and d0["fc_norm"] == pytest.approx(1.0, rel=1e-12)
        assert d3["label"] == "delta_3"
        for key in ("fc_norm", "certificate_norm", "search_value"):
            assert d3[key] == pytest.approx(math.exp(1.5), rel=1e-9)

    def test_passes(self, zeon_report):
        assert zeon_report.passed
        assert zeon_report.summary["searched"] == 2
        assert set(zeon_report.verdicts) == {"certificate_gap", "search_floor", "search_ceiling"}


class TestDiag:
    def test_curves_and_constant(self, diag_report):
        assert set(diag_report.curves) == {"compact", "flat"}
        for c in diag_report.curves.values():
            assert c["deltas"] == sorted(c["deltas"])
            assert np.all(np.diff(c["values"]) >= 0)
        assert all(r["value"] == 0.0 for r in diag_report.records if r["kind"] == "constant")

    def test_flat_witness(self, diag_report):
        assert diag_report.verdicts["flat_witness"]["passed"]


class TestThreeCircles:
    def test_monomials(self, three_report):
        mono = [r for r in three_report.records if r["kind"] == "monomial"]
        assert len(mono) == 2 * harness.THREE_CIRCLES_DEGREE + 1
        for r in mono:
            assert r["ratio"] == pytest.approx(1 / (2 * math.pi), abs=1e-9)

    def test_constant_and_doubling(self, three_report):
        s = three_report.summary
        assert s["empirical_C"] >= 1 / (2 * math.pi) - 1e-9
        assert s["empirical_C_doubled"] >= s["empirical_C"]
        assert len([r for r in three_report.records if r["kind"] == "ratio"]) == 400


@pytest.fixture(scope="module")
def ikar_report():
    cfg = small("ikar").validate()
    return harness.run_ikar(cfg, pair_samples=16, rho_budget=2)


class TestIkar:
    def test_per_sample_bounds(self, ikar_report):
        report = ikar_report
        samples = [r for r in report.records if r["kind"] == "sample"]
        assert len(samples) == 8 and not any(r["generator_failed"] for r in samples)
        for r in samples:
            assert r["diagonal_l1"] <= 2 * math.pi + 1e-6
            assert r["diagonal_gap_l1"] <= 4 * math.pi + 1e-6
            assert r["modulus_passed"]

    def test_coverings_and_curve(self, ikar_report):
        report = ikar_report
        cov = {r["zeta_degree"]: r["count"] for r in report.records if r["kind"] == "covering"}
        assert set(cov) == {1, 2} and all(1 <= c <= 4 for c in cov.values())
        curve = report.curves["rho_K0"]
        assert np.all(np.diff(curve["values"]) >= 0)

    def test_constant_member_covers_once(self):
        grid = CircleGrid(512)
        lam = LaurentSeq(0, [0.3])
        assert covering_number([lam, lam, lam], 0.1, SpaceSpec.fc(0.5), grid).count == 1


class TestReports:
    def test_write_and_verify(self, tmp_path, diag_report):
        paths = write_report(diag_report, tmp_path / "sub" / "diag.json")
        names = sorted(p.name for p in paths)
        assert names == ["diag.compact.dat", "diag.csv", "diag.flat.dat", "diag.json"]
        data = load_report(tmp_path / "sub" / "diag.json")
        assert data["schema_version"] == "1"
        result = verify_report(data)
        assert result.passed and not result.mismatches

    def test_dat_files_two_columns(self, tmp_path, diag_report):
        write_report(diag_report, tmp_path / "d.json")
        rows = [line.split() for line in (tmp_path / "d.compact.dat").read_text().splitlines()
                if not line.startswith("#")]
        table = np.array(rows, dtype=float)
        assert table.shape == (4, 2)
        assert table[:, 1].tolist() == diag_report.curves["compact"]["values"]

    def test_csv_matches_records(self, tmp_path, zeon_report):
        write_report(zeon_report, tmp_path / "z.json")
        rows = list(csv.DictReader(io.StringIO((tmp_path / "z.csv").read_text())))
        assert len(rows) == len(zeon_report.records)
        assert float(rows[3]["fc_norm"]) == zeon_report.records[3]["fc_norm"]

    def test_json_roundtrip_exact(self, tmp_path, zeon_report):
        write_report(zeon_report, tmp_path / "z.json")
        data = load_report(tmp_path / "z.json")
        assert data["records"] == zeon_report.records
        assert data["config"] == zeon_report.config

    def test_verdicts_recomputable(self, zeon_report, diag_report, three_report):
        for rep in (zeon_report, diag_report, three_report):
            assert compute_verdicts(rep.config["experiment"], rep.records, rep.config) == rep.verdicts

    def test_tampered_record_detected(self, tmp_path, zeon_report):
        data = json.loads(json.dumps(zeon_report.to_dict()))
        data["records"][4]["certificate_gap"] = 0.5
        result = verify_report(data)
        assert "certificate_gap" in result.mismatches and not result.passed

    def test_tampered_verdict_detected(self, zeon_report):
        data = json.loads(json.dumps(zeon_report.to_dict()))
        data["verdicts"]["search_floor"]["passed"] = False
        assert verify_report(data).mismatches == ["search_floor"]

    @pytest.mark.parametrize("edit", [
        lambda d: d.update(schema_version="2"),
        lambda d: d.pop("records"),
        lambda d: d["config"].update(experiment="other"),
    ])
    def test_load_rejects_malformed(self, tmp_path, zeon_report, edit):
        data = json.loads(json.dumps(zeon_report.to_dict()))
        edit(data)
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError):
            load_report(path)
