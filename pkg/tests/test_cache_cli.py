"""Cache integrity, CLI dispatch, report emission."""

import json
import os

import pytest
from mpmath import mp, mpf

from quelab.cache import (
    basis_payload,
    cache_get,
    cache_put,
    find_entry,
    load_basis,
)
from quelab.cli import dispatch, emit_plot_data, emit_report
from quelab.config import RunConfig, parse_config_file
from quelab.errors import CorruptEntry, DomainError
from quelab.numfmt import decimal_to_mpf, mpf_to_decimal
from quelab.store import ProfileStore
from quelab.verify import ScenarioReport


class TestNumfmt:
    def test_exact_roundtrip_256(self):
        with mp.workprec(256):
            values = [
                mpf(2) / 3,
                -mpf(10) ** 40 / 7,
                mpf("1e-123") * mp.pi,
                mpf(1),
                mpf(0),
            ]
            for x in values:
                s = mpf_to_decimal(x)
                assert decimal_to_mpf(s, 256) == x, s

    def test_fixed_digit_formatting(self):
        assert mpf_to_decimal(mpf(1), 5) == "1.0000e0"
        assert mpf_to_decimal(mpf(-0.5), 3) == "-5.00e-1"
        assert mpf_to_decimal(mpf(0)) == "0"

    def test_parse_plain_and_scientific(self):
        assert decimal_to_mpf("42", 64) == 42
        assert decimal_to_mpf("-1.5e2", 64) == -150
        assert decimal_to_mpf("0.25", 64) == mpf("0.25")


class TestCache:
    def test_put_get_roundtrip(self, tmp_path, store):
        basis = store.basis(12)
        payload = basis_payload(basis, {})
        path = cache_put(str(tmp_path), payload)
        assert cache_get(path) == payload

    def test_truncated_file_is_corrupt(self, tmp_path, store):
        basis = store.basis(12)
        path = cache_put(str(tmp_path), basis_payload(basis, {}))
        data = open(path, "rb").read()
        with open(path, "wb") as fh:
            fh.write(data[: len(data) // 2])
        with pytest.raises(CorruptEntry):
            cache_get(path)
        # high-level loader treats it as a miss
        assert load_basis(str(tmp_path), 12, 256, 1) is None

    def test_digest_tamper_detected(self, tmp_path, store):
        basis = store.basis(12)
        path = cache_put(str(tmp_path), basis_payload(basis, {}))
        doc = json.load(open(path))
        doc["payload"]["t2_charpoly"][0] = "999"
        json.dump(doc, open(path, "w"))
        with pytest.raises(CorruptEntry):
            cache_get(path)

    def test_precision_is_part_of_key(self, tmp_path):
        s128 = ProfileStore(128, cache_dir=str(tmp_path))
        s128.basis(12)
        assert find_entry(str(tmp_path), 12, 128, 1) is not None
        assert find_entry(str(tmp_path), 12, 256, 1) is None

    def test_loaded_equals_computed(self, tmp_path):
        cold = ProfileStore(192, cache_dir=str(tmp_path))
        b1 = cold.basis(12)
        warm = ProfileStore(192, cache_dir=str(tmp_path))
        b2 = warm.basis(12)
        assert all(a == b for a, b in zip(b1.form(1).lam, b2.form(1).lam))
        assert b1.t2_charpoly == b2.t2_charpoly


def _report_fixture():
    return ScenarioReport(
        scenario="demo",
        params={"k_min": 12},
        columns=["k", "index", "value"],
        rows=[
            {"k": 12, "index": 1, "value": "1.5e0"},
            {"k": 16, "index": 1, "value": "2.5e-1"},
        ],
        verdict="PASS",
        tolerances={"criterion": "demo"},
        runtime_s=1.23,
        detail={},
        plot=("k", "value"),
    )


class TestEmission:
    def test_csv_golden(self):
        expect = b"k,index,value\n12,1,1.5e0\n16,1,2.5e-1\n"
        assert emit_report(_report_fixture(), "csv") == expect

    def test_csv_empty_grid_header_only(self):
        rep = _report_fixture()
        rep.rows = []
        assert emit_report(rep, "csv") == b"k,index,value\n"

    def test_json_roundtrip_and_zeroed_runtime(self):
        data = emit_report(_report_fixture(), "json")
        doc = json.loads(data)
        assert doc["scenario"] == "demo"
        assert doc["rows"][0]["value"] == "1.5e0"
        assert doc["runtime_s"] == 0.0
        with_timing = json.loads(emit_report(_report_fixture(), "json", timing=True))
        assert with_timing["runtime_s"] == 1.23

    def test_plot_data(self):
        assert emit_plot_data(_report_fixture()) == b"k,value\n12,1.5e0\n16,2.5e-1\n"


class TestConfig:
    def test_defaults_valid(self):
        cfg = RunConfig()
        assert cfg.precision_bits == 256

    def test_validation(self):
        with pytest.raises(DomainError):
            RunConfig(precision_bits=64)
        with pytest.raises(DomainError):
            RunConfig(k_min=13, k_max=20)
        with pytest.raises(DomainError):
            RunConfig(output_format="xml")

    def test_parse_file(self, tmp_path):
        path = tmp_path / "sweep.cfg"
        path.write_text(
            "# demo config\n"
            "precision_bits = 256\n"
            "k_min = 12\n"
            "k_max = 24\n"
            "scenarios = gammalemma\n"
            "out_dir = reports\n"
        )
        cfg = parse_config_file(str(path))
        assert cfg.k_max == 24
        assert cfg.scenarios == ["gammalemma"]

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("precission = 256\n")
        with pytest.raises(DomainError):
            parse_config_file(str(path))

    def test_env_cache_dir(self, monkeypatch):
        monkeypatch.setenv("QUELAB_CACHE_DIR", "/tmp/somewhere")
        assert RunConfig().resolved_cache_dir() == "/tmp/somewhere"


class TestDispatch:
    def test_unknown_flag_exits_2(self, capsys):
        assert dispatch(["--nonsense"]) == 2
        assert dispatch(["verify", "mystery"]) == 2

    def test_mass_rect_full_period(self, tmp_path, capsys, store):
        rc = dispatch(
            [
                "mass",
                "rect",
                "--weight",
                "12",
                "--index",
                "1",
                "--a",
                "-0.5",
                "--b",
                "0.5",
                "--t1",
                "1.0",
                "--cache-dir",
                str(tmp_path / "c"),
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        doc = json.loads(out)
        expect = store.i_value(12, 1, 1.0)
        assert abs(decimal_to_mpf(doc["mass"], 256) - expect) < mpf(1e-20)

    def test_verify_gammalemma_json(self, capsys):
        rc = dispatch(
            ["verify", "gammalemma", "--k-grid", "100,1000", "--precision", "192"]
        )
        out = capsys.readouterr().out
        assert rc == 0
        doc = json.loads(out)
        assert doc["verdict"] == "PASS"

    def test_verify_siegel_small(self, tmp_path, capsys):
        rc = dispatch(
            [
                "verify",
                "siegel",
                "--k-min",
                "12",
                "--k-max",
                "16",
                "--cache-dir",
                str(tmp_path / "c"),
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        doc = json.loads(out)
        assert doc["verdict"] == "PASS"
        assert doc["rows"]

    def test_numeric_error_exits_3(self, capsys, tmp_path):
        rc = dispatch(
            [
                "verify",
                "orthogonality",
                "--k-min",
                "12",
                "--k-max",
                "22",
                "--cache-dir",
                str(tmp_path / "c"),
            ]
        )
        assert rc == 3

    def test_sweep_config(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        out_dir = tmp_path / "reports"
        cfg.write_text(
            "scenarios = gammalemma\n"
            f"out_dir = {out_dir}\n"
            "precision_bits = 192\n"
        )
        rc = dispatch(["sweep", "--config", str(cfg)])
        assert rc == 0
        report = json.loads((out_dir / "report_gammalemma.json").read_text())
        assert report["verdict"] == "PASS"

    def test_out_file(self, tmp_path, capsys):
        target = tmp_path / "rep.json"
        rc = dispatch(
            [
                "verify",
                "gammalemma",
                "--k-grid",
                "100,1000",
                "--precision",
                "160",
                "--out",
                str(target),
            ]
        )
        assert rc == 0
        assert json.loads(target.read_text())["scenario"] == "gammalemma"


class TestWarmCacheDeterminism:
    def test_repeat_runs_byte_identical(self, tmp_path):
        cache = str(tmp_path / "cache")
        args = [
            "verify",
            "vertical",
            "--k-min",
            "12",
            "--k-max",
            "18",
            "--cache-dir",
            cache,
            "--out",
        ]
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        assert dispatch(args + [str(out1)]) in (0, 1)
        assert dispatch(args + [str(out2)]) in (0, 1)
        assert out1.read_bytes() == out2.read_bytes()
