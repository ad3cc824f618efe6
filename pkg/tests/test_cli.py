import csv
import hashlib
import json

import pytest

from waveop import cli, oracle
from waveop.model import HamiltonianSpec

REAL = """schema_version = 1

[hamiltonian]
label = quadratic
kinetic_coeffs = 0, 0, 0.5
potential_coeffs = 0, 0, 0.5

[grid]
x_min = {L}
x_max = {R}
p_min = {L}
p_max = {R}
nx = {n}
np = {n}

[run]
mode = {mode}
step = {step}
n_steps = 100
checkpoint_every = 25
x0 = {x0}
{extra}

[output]
path = {stem}
"""


def write_cfg(tmp_path, mode="real_quantum", L=-8, R=8, n=64, step=0.01, x0=1.0, extra="", stem="demo"):
    path = tmp_path / f"{stem}.cfg"
    path.write_text(REAL.format(mode=mode, L=L, R=R, n=n, step=step, x0=x0, extra=extra, stem=stem))
    return path


def test_describe_benchmark(capsys):
    assert cli.main(["describe", str(cli.data_path("benchmark_n2.cfg"))]) == 0
    out = capsys.readouterr().out
    assert "mode: thermal_sweep" in out
    assert "grid: 128x128" in out
    assert "checkpoints: 20" in out
    assert "beta = 10" in out
    assert "estimated memory" in out


def test_describe_hilbert_reports_doubled_space(tmp_path, capsys):
    cfg = write_cfg(tmp_path, mode="hilbert_real", extra="basis_size = 12")
    assert cli.main(["describe", str(cfg)]) == 0
    assert "N = 12, doubled space N^2 = 144" in capsys.readouterr().out


def test_invalid_mode_lists_modes(tmp_path, capsys):
    cfg = write_cfg(tmp_path, mode="warp")
    assert cli.main(["describe", str(cfg)]) == 2
    err = capsys.readouterr().err
    for mode in ("imag_quantum", "real_quantum", "hilbert_real", "thermal_sweep"):
        assert mode in err


def test_verify_pass(benchmark_runs, capsys):
    code = cli.main(["verify", str(cli.data_path("golden_n4.json")), str(benchmark_runs[4]["csv"])])
    out = capsys.readouterr().out
    assert code == 0
    assert out.strip().endswith("verify: pass")
    assert out.count("PASS") == 45


def _perturb(src, dst, tier, beta, column, delta):
    with open(src, newline="") as fh:
        rows = list(csv.reader(fh))
    head = rows[0]
    for r in rows[1:]:
        if r[head.index("tier")] == tier and float(r[head.index("beta")]) == beta:
            r[head.index(column)] = repr(float(r[head.index(column)]) + delta)
    with open(dst, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def test_verify_flags_twice_tolerance(benchmark_runs, tmp_path, capsys):
    golden = cli.data_path("golden_n2.json")
    bad = tmp_path / "bad.csv"
    _perturb(benchmark_runs[2]["csv"], bad, "semiclassical", 5.0, "energy", 2 * cli.TOLERANCES["semiclassical"])
    assert cli.main(["verify", str(golden), str(bad)]) == 1
    fails = [ln for ln in capsys.readouterr().out.splitlines() if ln.startswith("FAIL")]
    assert len(fails) == 1
    assert "semiclassical" in fails[0] and "beta=5" in fails[0] and "energy" in fails[0]


def test_verify_missing_column(benchmark_runs, tmp_path, capsys):
    with open(benchmark_runs[2]["csv"]) as fh:
        text = fh.read().replace("dxdp,", "dxdq,", 1)
    bad = tmp_path / "bad.csv"
    bad.write_text(text)
    assert cli.main(["verify", str(cli.data_path("golden_n2.json")), str(bad)]) == 2
    assert "dxdp" in capsys.readouterr().err


def test_verify_bad_golden(benchmark_runs, tmp_path, capsys):
    g = tmp_path / "g.json"
    g.write_text(json.dumps([{"tier": "quantum"}]))
    assert cli.main(["verify", str(g), str(benchmark_runs[2]["csv"])]) == 2


def test_golden_files_are_reproducible(tmp_path):
    # quantum and classical entries only; the dense semiclassical rebuild is covered elsewhere
    entries = oracle.read_golden(cli.data_path("golden_n2.json"))
    for e in entries:
        if e["tier"] == "quantum":
            ref = oracle.exact_diag_thermal(HamiltonianSpec.benchmark(2), 128, e["beta"])
        elif e["tier"] == "classical":
            ref = oracle.classical_gibbs_quadrature(HamiltonianSpec.benchmark(2), e["beta"])
        else:
            continue
        assert ref["energy"] == e["energy"]


@pytest.mark.parametrize("mode", ["real_quantum", "real_classical"])
def test_real_time_run(tmp_path, mode):
    cfg = write_cfg(tmp_path, mode=mode, stem=mode)
    assert cli.main(["run", str(cfg), "--output-dir", str(tmp_path)]) == 0
    with open(tmp_path / f"{mode}.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(cli.REAL_HEADER)
    assert len(rows) == 5
    last = rows[-1]
    assert float(last["t"]) == pytest.approx(1.0)
    # Strang splitting conserves energy to O(dt^2); dt = 0.01 here
    assert abs(float(last["energy"]) - float(rows[0]["energy"])) < 1e-4
    assert abs(float(last["norm"]) - 1) < 1e-10


def test_hilbert_real_run(tmp_path):
    cfg = write_cfg(tmp_path, mode="hilbert_real", extra="basis_size = 24", step=0.001, stem="hr")
    assert cli.main(["run", str(cfg), "--output-dir", str(tmp_path)]) == 0
    with open(tmp_path / "hr.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5
    assert all(r["mode"] == "hilbert_real" for r in rows)
    assert abs(float(rows[-1]["energy"]) - 1.0) < 1e-8


def test_resolution_failure_exits_3(tmp_path, capsys):
    cfg = write_cfg(tmp_path, L=-3, R=3, n=16, x0=2.5)
    assert cli.main(["run", str(cfg), "--output-dir", str(tmp_path)]) == 3
    assert "spectral tail" in capsys.readouterr().err


def test_run_reproducible_and_manifest(tmp_path):
    cfg = write_cfg(tmp_path, mode="imag_quantum", step=0.01, stem="iq")
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", str(cfg), "--output-dir", str(a)]) == 0
    assert cli.main(["run", str(cfg), "--output-dir", str(b), "--threads", "2"]) == 0
    for name in ("iq.csv", "iq.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    manifest = json.loads((a / "iq.manifest.json").read_text())
    for name in manifest["outputs"]:
        assert manifest["sha256"][name] == hashlib.sha256((a / name).read_bytes()).hexdigest()
    assert manifest["threads"] == 1 and manifest["seed"] == 0
    assert "started" in manifest and "finished" in manifest
    mirror = json.loads((a / "iq.json").read_text())
    assert "started" not in json.dumps(mirror)
    assert mirror["series"]["quantum"]["beta"][-1] == pytest.approx(1.0)


def test_output_dir_from_environment(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, mode="imag_classical", stem="ic")
    target = tmp_path / "env_out"
    monkeypatch.setenv(cli.ENV_OUTPUT_DIR, str(target))
    assert cli.main(["run", str(cfg)]) == 0
    assert (target / "ic.csv").exists()


def test_missing_config_exits_2(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "absent.cfg")]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_bad_threads_exits_2(tmp_path):
    assert cli.main(["describe", str(cli.data_path("benchmark_n2.cfg")), "--threads", "0"]) == 2


def test_selftest(capsys):
    assert cli.main(["selftest", "--seed", "3"]) == 0
    assert "seed=3" in capsys.readouterr().out


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("waveop ")
