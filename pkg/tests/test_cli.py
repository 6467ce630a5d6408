import csv
import json
import os
import time

import numpy as np
import pytest

from corrmac import cli
from corrmac.config import ConfigError, load_config, parse_config
from corrmac.ldpc import from_alist
from corrmac.region import FeasibleRegion, characteristic_points, joint_entropy

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")


def _cfg(name):
    return os.path.join(CONFIGS, name)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _run(*argv):
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def region_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("region")
    assert _run("region", "--config", _cfg("region.ini"), "--out", str(out)) == 0
    return out


def test_region_tables_match_module(region_out):
    cfg = load_config(_cfg("region.ini")).region
    ent = _rows(region_out / "entropy.csv")
    assert [int(r["n"]) for r in ent] == list(range(1, cfg.n_max + 1))
    cps = _rows(region_out / "characteristic_points.csv")
    assert [int(r["n"]) for r in cps] == list(range(2, cfg.n_max + 1))
    for rho in cfg.rhos:
        for r in ent:
            assert abs(float(r[f"H_rho{rho:g}"]) - joint_entropy(int(r["n"]), rho)) <= 1e-6
        for r in cps:
            cp = characteristic_points(int(r["n"]), rho, cfg.r)
            assert abs(float(r[f"lambda_bal_rho{rho:g}"]) - cp.lambda_bal) <= 1e-6
            assert abs(float(r[f"lambda_unb_rho{rho:g}"]) - cp.lambda_unb) <= 1e-6
            assert abs(float(r[f"lambda_lim_rho{rho:g}"]) - cp.lambda_lim) <= 1e-6


def test_region_boundaries_lie_on_region(region_out):
    cfg = load_config(_cfg("region.ini")).region
    for rho in cfg.rhos:
        for n in cfg.boundary_n:
            rows = _rows(region_out / f"boundary_n{n}_rho{rho:g}.csv")
            assert len(rows) > 10
            region = FeasibleRegion(n, rho, cfg.r)
            fixed = [region.characteristic_points().lambda_unb] * (n - 2)
            for r in rows[:: max(1, len(rows) // 20)]:
                a, b = float(r["lambda1"]), float(r["lambda2"])
                assert region.is_feasible([a, b + 1e-5] + fixed)
                if b > 1e-5:
                    assert not region.is_feasible([a, b - 1e-5] + fixed)


def test_region_is_byte_identical(tmp_path, region_out):
    assert _run("region", "--config", _cfg("region.ini"), "--out", str(tmp_path)) == 0
    for name in os.listdir(region_out):
        assert (tmp_path / name).read_bytes() == (region_out / name).read_bytes(), name


def test_manifest_records_resolved_config(region_out):
    doc = json.loads((region_out / "manifest.json").read_text())
    assert doc["command"] == "region"
    assert doc["config"]["seed"] == 0
    assert doc["config"]["region"]["n_max"] == 20


@pytest.mark.parametrize("text,needle", [
    ("[region]\nn_max = 20\nbogus = 1\n", "bogus"),
    ("[region]\nn_max = twenty\n", "n_max"),
    ("[region]\nrhos = 0.95, 1.5\n", "rhos"),
    ("[global]\nseed = -1\n[region]\n", "seed"),
    ("[ber]\ncode = nope\nn = 2\nrho = 0.9\ngammas = 1 1\n", "code"),
    ("[nonsense]\n", "nonsense"),
    ("not an ini file", "malformed"),
])
def test_malformed_config_names_key(tmp_path, capsys, text, needle):
    path = _write(tmp_path, text)
    command = "ber" if "[ber]" in text else "region"
    assert _run(command, "--config", path, "--out", str(tmp_path / "o")) == cli.EXIT_CONFIG
    assert needle in capsys.readouterr().err


def test_error_reports_line_number(tmp_path):
    with pytest.raises(ConfigError, match=r"\[region\] n_max \(line 3\)"):
        parse_config("[region]\nr = 0.5\nn_max = 0\n")


def test_missing_section_and_file(tmp_path, capsys):
    path = _write(tmp_path, "[region]\n")
    assert _run("ber", "--config", path) == cli.EXIT_CONFIG
    assert "[ber]" in capsys.readouterr().err
    assert _run("region", "--config", str(tmp_path / "absent.ini")) == cli.EXIT_CONFIG


def test_bad_arguments_are_config_errors(tmp_path):
    assert _run("region") == cli.EXIT_CONFIG
    assert _run("region", "--config", _cfg("region.ini"), "--seed", "-3") == cli.EXIT_CONFIG
    assert _run("region", "--config", _cfg("region.ini"), "--seed", str(2**64)) == cli.EXIT_CONFIG


def test_too_many_sources_refused(tmp_path, capsys):
    text = ("[code:c]\nkind = sccc\ninfo_length = 64\n[ber]\ncode = c\nn = 13\nrho = 0.9\n"
            "gammas = " + " ".join(["1"] * 13) + "\n")
    assert _run("ber", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "n" in err and "12" in err
    assert not (tmp_path / "o").exists()


def test_grid_point_length_checked():
    with pytest.raises(ConfigError, match="gammas"):
        parse_config("[code:c]\nkind = sccc\ninfo_length = 64\n[ber]\ncode = c\nn = 3\nrho = 0.9\ngammas = 1 1\n")


def test_smoke_profile_is_fast(tmp_path):
    t0 = time.perf_counter()
    assert _run("ber", "--config", _cfg("ber_smoke.ini"), "--out", str(tmp_path)) == 0
    assert time.perf_counter() - t0 < 60
    rows = _rows(tmp_path / "ber.csv")
    assert len(rows) == 4
    assert {r["source"] for r in rows} == {"1", "2"}
    for r in rows:
        ber = float(r["ber"])
        assert 0 <= ber <= 1 and float(r["ci95"]) > 0 and int(r["blocks"]) == 20
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert doc["blocks_per_point"] == [20, 20] and doc["wall_clock_s"] > 0


def test_noiseless_profile_has_no_errors(tmp_path):
    assert _run("ber", "--config", _cfg("ber_noiseless.ini"), "--out", str(tmp_path)) == 0
    rows = _rows(tmp_path / "ber.csv")
    assert len(rows) == 2
    assert all(float(r["ber"]) == 0.0 and int(r["errors"]) == 0 for r in rows)


def test_ber_reproducible_and_seed_override(tmp_path):
    text = ("[global]\nseed = 3\n[code:c]\nkind = sccc\ninfo_length = 128\n"
            "[ber]\ncode = c\nn = 2\nrho = 0.95\ngammas = 0.5 0.5\nmax_blocks = 4\ntarget_errors = 100000\n")
    path = _write(tmp_path, text)
    outs = [tmp_path / k for k in ("a", "b", "c")]
    assert _run("ber", "--config", path, "--out", str(outs[0])) == 0
    assert _run("ber", "--config", path, "--out", str(outs[1])) == 0
    assert _run("ber", "--config", path, "--out", str(outs[2]), "--seed", "11") == 0
    a, b, c = ((o / "ber.csv").read_bytes() for o in outs)
    assert a == b and a != c
    assert json.loads((outs[2] / "manifest.json").read_text())["config"]["seed"] == 11


def test_interrupted_run_keeps_finished_points(tmp_path, monkeypatch):
    real = cli.simulate_ber

    def dies_after_first(cfg, grid, on_point=None):
        def hook(rows):
            on_point(rows)
            raise KeyboardInterrupt

        return real(cfg, grid, on_point=hook)

    monkeypatch.setattr(cli, "simulate_ber", dies_after_first)
    text = ("[code:c]\nkind = sccc\ninfo_length = 64\n"
            "[ber]\ncode = c\nn = 2\nrho = 0.9\ngammas = 1 1; 2 2; 3 3\nmax_blocks = 2\n")
    with pytest.raises(KeyboardInterrupt):
        _run("ber", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o"))
    rows = _rows(tmp_path / "o" / "ber.csv")
    assert len(rows) == 2 and {r["gamma_1"] for r in rows} == {"1"}


def test_runtime_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(cfg, out):
        raise RuntimeError("decoder exploded")

    monkeypatch.setitem(cli.COMMANDS, "region", boom)
    assert _run("region", "--config", _cfg("region.ini"), "--out", str(tmp_path)) == cli.EXIT_RUNTIME
    assert "decoder exploded" in capsys.readouterr().err


def test_build_code_roundtrip(tmp_path):
    text = "[code:small]\nkind = ldpc\nlength = 512\ndegrees = irregular3\nconstruction_seed = 4\n[build-code]\ncode = small\n"
    assert _run("build-code", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")) == 0
    code = from_alist((tmp_path / "o" / "small.alist").read_text())
    assert code.N == 512
    doc = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert doc["N"] == 512 and doc["L"] == code.L
    assert np.isclose(doc["rate"], code.rate)


def test_build_sccc_description(tmp_path):
    text = "[code:s]\nkind = sccc\ninfo_length = 100\ninterleaver_seed = 2\n[build-code]\ncode = s\n"
    assert _run("build-code", "--config", _write(tmp_path, text), "--out", str(tmp_path)) == 0
    assert (tmp_path / "s.sccc").read_text().strip()


@pytest.mark.slow
def test_exit_run_reproducible(tmp_path):
    text = ("[code:s]\nkind = sccc\ninfo_length = 510\n"
            "[exit]\ncodes = s\nns = 2\nrhos = 0.95\nmc_samples = 100000\ntol = 0.02\n")
    path = _write(tmp_path, text)
    for d in ("a", "b"):
        assert _run("exit", "--config", path, "--out", str(tmp_path / d)) == 0
    a = (tmp_path / "a" / "exit_points.csv").read_bytes()
    assert a == (tmp_path / "b" / "exit_points.csv").read_bytes()
    (row,) = _rows(tmp_path / "a" / "exit_points.csv")
    assert float(row["lambda_unb"]) >= float(row["theory_lambda_unb"])
    assert float(row["lambda_bal"]) >= float(row["theory_lambda_bal"])
    assert float(row["theory_lambda_lim"]) <= float(row["theory_lambda_unb"])
    trace = _rows(tmp_path / "a" / "exit_trace_s_n2_rho0.95_bal.csv")
    assert trace and set(trace[0]) == {"gamma", "snr_in", "snr_out"}
