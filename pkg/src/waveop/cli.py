"""Command-line experiment runner.

    waveop run CONFIG          run a config, write CSV + JSON + manifest
    waveop describe CONFIG     print the resolved plan without running
    waveop verify GOLDEN CSV   compare a results CSV against golden values
    waveop golden              regenerate the bundled golden files from the oracles
    waveop selftest            randomized wave-operator vs Liouville check

Exit codes: 0 ok, 1 verification failure, 2 config/schema error, 3 numerical error.
The default output directory comes from ``WAVOP_OUTPUT_DIR`` (else the cwd).
"""
import argparse
import csv
import datetime as dt
import hashlib
import io
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, hilbert, imagtime, oracle, phasespace
from .errors import ConfigError, NumericalError
from .model import GridSpec, HamiltonianSpec, load_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
ENV_OUTPUT_DIR = "WAVOP_OUTPUT_DIR"
REAL_HEADER = ("t", "energy", "x", "p", "dx", "dp", "norm", "mode")
GOLDEN_BETAS = (0.5, 1.0, 2.0, 5.0, 10.0)
GOLDEN_KEYS = ("hamiltonian", "tier", "beta", "energy", "dx", "dp", "oracle", "tolerance")
# dense semiclassical reference grid; wide enough for the beta = 0.5 states
DENSE_GRID = GridSpec.square(7.5, 48)
TOLERANCES = {"quantum": 1e-3, "semiclassical": 1e-4, "classical": 1e-4}


def data_path(name):
    return Path(str(resources.files("waveop") / "data" / name))


# ---------------------------------------------------------------------------
# running


def _imag_series(config, threads):
    if config.mode == "thermal_sweep":
        out = imagtime.thermal_sweep(config, threads=threads)
        return [out[t] for t in imagtime.TIERS]
    H = config.hamiltonian
    start = phasespace.uniform_field(config.grid, H.hbar)
    args = (H, config.step, config.n_steps, config.checkpoint_every)
    if config.mode == "imag_quantum":
        return [imagtime.bloch_quantum(start, *args)[1]]
    if config.mode == "imag_semiclassical":
        return [imagtime.bloch_semiclassical(start, *args)[1]]
    return [imagtime.bloch_classical(start, *args)[1]]


def _real_rows(config):
    H = config.hamiltonian
    F = config.phase_spec()
    rows = []
    if config.mode == "hilbert_real":
        n = config.basis_size
        hbar = H.hbar
        psi = hilbert.coherent_state(n, config.x0, config.p0, hbar)
        omega0 = np.outer(psi, psi.conj())
        hm = hilbert.hamiltonian_matrix(H, n)
        fm = None if F is None else hilbert.hamiltonian_matrix(F, n)
        X, P = hilbert.build_position_momentum(n, hbar)
        times, omegas = hilbert.wave_operator_trajectory(
            omega0, hm, fm, config.step, config.n_steps, config.checkpoint_every, hbar
        )
        for t, om in zip(times, omegas):
            rho = hilbert.density_from_wave(om)
            tr = float(np.trace(rho).real)

            def ev(a):
                return float(np.trace(rho @ a).real) / tr

            x1, p1 = ev(X), ev(P)
            dx = math.sqrt(max(ev(X @ X) - x1 ** 2, 0.0))
            dp = math.sqrt(max(ev(P @ P) - p1 ** 2, 0.0))
            rows.append((float(t), ev(hm), x1, p1, dx, dp, tr, config.mode))
        return rows
    start = phasespace.coherent_wave_field(config.grid, config.x0, config.p0, H.hbar)
    propagate = (
        phasespace.propagate_quantum_real if config.mode == "real_quantum"
        else phasespace.propagate_classical_real
    )
    times, frames = propagate(start, H, F, config.step, config.n_steps, config.checkpoint_every)
    for t, f in zip(times, frames):
        m = phasespace.phase_moments(f, H)
        rows.append((float(t), m["energy"], m["x"], m["p"], m["dx"], m["dp"], f.norm2, config.mode))
    return rows


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def execute(config, threads=1):
    """Run a config; returns ``(csv_text, payload)`` where payload is JSON-ready."""
    if config.mode in ("hilbert_real", "real_quantum", "real_classical"):
        rows = _real_rows(config)
        payload = {"columns": list(REAL_HEADER), "rows": [list(r) for r in rows]}
        return _csv_text(REAL_HEADER, rows), payload
    series = _imag_series(config, threads)
    payload = {
        s.tier: {
            "beta": s.axis, "energy": s.energy, "dx": s.dx, "dp": s.dp, "dxdp": s.dxdp,
            "norm_prerenorm": s.norm_prerenorm,
        }
        for s in series
    }
    return imagtime.series_to_csv(series), payload


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _now():
    return dt.datetime.now(dt.timezone.utc).isoformat()


def cmd_run(args):
    config = load_config(args.config)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(config.output_path).name
    started = _now()
    text, payload = execute(config, threads=args.threads)
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    csv_path.write_text(text)
    mirror = {
        "config": config.to_dict(),
        "version": __version__,
        "numpy": np.__version__,
        "series": payload,
    }
    json_path.write_text(json.dumps(mirror, indent=1, sort_keys=True) + "\n")
    manifest = {
        "config": config.to_dict(),
        "version": __version__,
        "seed": args.seed,
        "threads": args.threads,
        "started": started,
        "finished": _now(),
        "outputs": [csv_path.name, json_path.name],
        "sha256": {p.name: _sha256(p) for p in (csv_path, json_path)},
    }
    (out_dir / f"{stem}.manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    print(f"wrote {csv_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# describe


def _poly_text(coeffs, var):
    terms = [f"{c:g}*{var}^{k}" if k else f"{c:g}" for k, c in enumerate(coeffs) if c]
    return " + ".join(terms) or "0"


def describe_text(config):
    H = config.hamiltonian
    lines = [
        f"mode: {config.mode}",
        f"hamiltonian: {H.label or '(unlabelled)'}  T(p) = {_poly_text(H.kinetic_coeffs, 'p')}"
        f"  V(x) = {_poly_text(H.potential_coeffs, 'x')}  hbar = {H.hbar:g}",
    ]
    total = config.step * config.n_steps
    axis = "beta" if config.mode.startswith("imag") or config.mode == "thermal_sweep" else "t"
    n_marks = len(imagtime._checkpoints(config.n_steps, config.checkpoint_every))
    if config.mode == "hilbert_real":
        n = config.basis_size
        lines.append(f"basis: N = {n}, doubled space N^2 = {n * n}")
        lines.append(f"stepper: RK4, dt = {config.step:g} x {config.n_steps} steps ({axis} = {total:g})")
        mem = 12 * n * n * 16 + (n_marks + 1) * n * n * 16
    else:
        g = config.grid
        lines.append(
            f"grid: {g.nx}x{g.np} on x [{g.x_min:g}, {g.x_max:g}) p [{g.p_min:g}, {g.p_max:g})"
            f"  dx = {g.dx:g} dp = {g.dp:g}"
        )
        stepper = "closed form" if config.mode == "imag_classical" else "Strang split"
        if config.mode == "thermal_sweep":
            stepper = "Strang split (quantum, semiclassical) + closed form (classical)"
        key = "d_beta" if axis == "beta" else "dt"
        lines.append(f"stepper: {stepper}, {key} = {config.step:g} x {config.n_steps} steps ({axis} = {total:g})")
        frames = 1 if axis == "beta" else n_marks + 1
        tiers = 3 if config.mode == "thermal_sweep" else 1
        mem = (8 * tiers + frames) * g.nx * g.np * 16
    lines.append(f"checkpoints: {n_marks} (every {config.checkpoint_every} steps)")
    if config.phase_generator != "zero":
        lines.append(f"phase generator: {config.phase_generator}")
    lines.append(f"estimated memory: {mem / 2 ** 20:.1f} MiB")
    return "\n".join(lines)


def cmd_describe(args):
    print(describe_text(load_config(args.config)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


class SchemaError(ValueError):
    pass


def read_results(path):
    """Results CSV as ``{(tier, beta): row}``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        missing = [c for c in imagtime.CSV_HEADER if c not in cols]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        out = {}
        for row in reader:
            try:
                key = (row["tier"], round(float(row["beta"]), 12))
                out[key] = {k: float(row[k]) for k in ("energy", "dx", "dp")}
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}: bad row {row}: {exc}") from exc
    return out


def verify_files(golden_path, results_path):
    """Return ``(ok, report_lines)``; raises SchemaError on malformed input."""
    try:
        golden = oracle.read_golden(golden_path)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{golden_path}: {exc}") from exc
    if not isinstance(golden, list):
        raise SchemaError(f"{golden_path}: expected a JSON list")
    for entry in golden:
        missing = [k for k in GOLDEN_KEYS if k not in entry]
        if missing:
            raise SchemaError(f"{golden_path}: entry missing {', '.join(missing)}")
    results = read_results(results_path)
    ok = True
    lines = []
    for e in golden:
        key = (e["tier"], round(float(e["beta"]), 12))
        row = results.get(key)
        if row is None:
            ok = False
            lines.append(f"FAIL {e['tier']} beta={e['beta']:g}: no such row in results")
            continue
        for q in ("energy", "dx", "dp"):
            diff = abs(row[q] - e[q])
            good = diff <= e["tolerance"]
            ok &= good
            lines.append(
                f"{'PASS' if good else 'FAIL'} {e['hamiltonian']} {e['tier']} beta={e['beta']:g} "
                f"{q}: {row[q]:.10g} vs {e[q]:.10g} (|diff| {diff:.2e}, tol {e['tolerance']:g})"
            )
    return ok, lines


def cmd_verify(args):
    ok, lines = verify_files(args.golden, args.results)
    print("\n".join(lines))
    print("verify: " + ("pass" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# golden generation and self-test


def golden_for(n, betas=GOLDEN_BETAS):
    H = HamiltonianSpec.benchmark(n)
    entries = oracle.golden_entries(
        H, betas, "quantum", [oracle.exact_diag_thermal(H, 128, b) for b in betas],
        "exact_diag_thermal N=128", TOLERANCES["quantum"],
    )
    entries += oracle.golden_entries(
        H, betas, "semiclassical",
        oracle.semiclassical_dense_series(H, DENSE_GRID, betas),
        "semiclassical_dense_reference 48x48 [-7.5,7.5]^2", TOLERANCES["semiclassical"],
    )
    entries += oracle.golden_entries(
        H, betas, "classical", [oracle.classical_gibbs_quadrature(H, b) for b in betas],
        "classical_gibbs_quadrature", TOLERANCES["classical"],
    )
    return entries


def cmd_golden(args):
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for n in (2, 4):
        path = out_dir / f"golden_n{n}.json"
        oracle.write_golden(path, golden_for(n))
        print(f"wrote {path}")
    return EXIT_OK


def selftest(seed, n=8, t=2.0, dt=1e-3):
    """Max deviation between wave-operator and direct Liouville densities for random H, F."""
    rng = np.random.default_rng(seed)
    H = hilbert.random_hermitian(n, rng)
    F = hilbert.random_hermitian(n, rng)
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    psi /= np.linalg.norm(psi)
    omega0 = np.outer(psi, psi.conj())
    steps = int(round(t / dt))
    _, omegas = hilbert.wave_operator_trajectory(omega0, H, F, dt, steps, steps)
    _, rhos = oracle.liouville_direct(omega0 @ omega0.conj().T, H, t, dt, every=steps)
    return float(np.max(np.abs(hilbert.density_from_wave(omegas[-1]) - rhos[-1])))


def cmd_selftest(args):
    err = selftest(args.seed)
    good = err < 1e-8
    print(f"selftest seed={args.seed}: max |rho_wave - rho_liouville| = {err:.2e} {'pass' if good else 'FAIL'}")
    return EXIT_OK if good else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--output-dir", default=argparse.SUPPRESS,
        help=f"output directory (default ${ENV_OUTPUT_DIR} or the current directory)",
    )
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads for independent tiers")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for randomized self-tests only")

    parser = argparse.ArgumentParser(prog="waveop", description="Wave-operator dynamics runner", parents=[common])
    parser.add_argument("--version", action="version", version=f"waveop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("describe", parents=[common], help="print the plan for a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_describe)
    p = sub.add_parser("verify", parents=[common], help="compare results CSV with a golden file")
    p.add_argument("golden")
    p.add_argument("results")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("golden", parents=[common], help="regenerate golden files from the oracles")
    p.set_defaults(func=cmd_golden)
    p = sub.add_parser("selftest", parents=[common], help="randomized wave-operator vs Liouville check")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if not hasattr(args, "output_dir"):
        args.output_dir = os.environ.get(ENV_OUTPUT_DIR, ".")
    args.threads = getattr(args, "threads", 1)
    args.seed = getattr(args, "seed", 0)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, SchemaError) as exc:
        diags = getattr(exc, "diagnostics", [str(exc)])
        for d in diags:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
