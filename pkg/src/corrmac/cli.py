"""Command-line experiment runner.

    corrmac region     --config cfg.ini --out results/
    corrmac ber        --config cfg.ini --out results/ [--seed 7]
    corrmac exit       --config cfg.ini --out results/
    corrmac build-code --config cfg.ini --out results/

Exit status: 0 success, 1 configuration error, 2 runtime error.
"""

import argparse
import csv
import json
import logging
import os
import sys
import time

from . import __version__
from .channel import ChannelConfig
from .config import ConfigError, ExperimentConfig, build_from_spec, load_config
from .exitchart import ExitSettings, find_lambda_bal, find_lambda_unb
from .jcd import JcdConfig, simulate_ber
from .ldpc import LdpcCode, to_alist
from .region import FeasibleRegion, characteristic_points, joint_entropy

log = logging.getLogger("corrmac")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _cap(x: float) -> str:
    return f"{x:.6f}"


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_manifest(out, command, cfg: ExperimentConfig, extra=None):
    doc = {"command": command, "version": __version__, "config": cfg.resolved(command)}
    if extra:
        doc.update(extra)
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_region(cfg: ExperimentConfig, out: str) -> None:
    rc = cfg.region
    ns = range(1, rc.n_max + 1)
    _write_csv(
        os.path.join(out, "entropy.csv"),
        ["n"] + [f"H_rho{p:g}" for p in rc.rhos],
        [[n] + [_cap(joint_entropy(n, p)) for p in rc.rhos] for n in ns],
    )
    header, rows = ["n"], []
    for p in rc.rhos:
        header += [f"lambda_bal_rho{p:g}", f"lambda_unb_rho{p:g}", f"lambda_lim_rho{p:g}"]
    for n in range(2, rc.n_max + 1):
        row = [n]
        for p in rc.rhos:
            cp = characteristic_points(n, p, rc.r)
            row += [_cap(cp.lambda_bal), _cap(cp.lambda_unb), _cap(cp.lambda_lim)]
        rows.append(row)
    _write_csv(os.path.join(out, "characteristic_points.csv"), header, rows)
    for p in rc.rhos:
        for n in rc.boundary_n:
            region = FeasibleRegion(n, p, rc.r)
            fixed = [region.characteristic_points().lambda_unb] * (n - 2)
            curve = region.boundary_projection(fixed, rc.grid_step)
            _write_csv(os.path.join(out, f"boundary_n{n}_rho{p:g}.csv"), ["lambda1", "lambda2"],
                       [[_cap(a), _cap(b)] for a, b in curve])
    _write_manifest(out, "region", cfg)


def run_ber(cfg: ExperimentConfig, out: str) -> None:
    bc = cfg.ber
    code = build_from_spec(cfg.codes[bc.code])
    jcd = JcdConfig(
        n=bc.n, rho=bc.rho, channels=[ChannelConfig.from_snr(g) for g in bc.gammas[0]], code=code,
        internal_iters=bc.internal_iters, external_iters=bc.external_iters, max_blocks=bc.max_blocks,
        target_errors=bc.target_errors, seed=cfg.seed,
    )
    path = os.path.join(out, "ber.csv")
    _write_csv(path, [f"gamma_{k + 1}" for k in range(bc.n)] + ["source", "ber", "ci95", "blocks", "errors"], [])
    blocks = []
    start = time.perf_counter()

    def append(rows):
        with open(path, "a", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for r in rows:
                w.writerow([f"{g:.6g}" for g in r.gammas] + [r.source + 1, f"{r.ber:.6e}", f"{r.ci95:.6e}",
                                                             r.blocks, r.errors])
        blocks.append(rows[0].blocks)
        log.info("gammas=%s blocks=%d ber=%s", rows[0].gammas, rows[0].blocks, [f"{r.ber:.3e}" for r in rows])

    simulate_ber(jcd, bc.gammas, on_point=append)
    _write_manifest(out, "ber", cfg, {"wall_clock_s": round(time.perf_counter() - start, 3),
                                      "blocks_per_point": blocks})


def run_exit(cfg: ExperimentConfig, out: str) -> None:
    ec = cfg.exit
    settings = ExitSettings(mc_samples=ec.mc_samples, llr_samples=ec.llr_samples, escape=ec.escape,
                            unbalanced_snr_in=ec.unbalanced_snr_in, bracket=tuple(ec.bracket), tol=ec.tol,
                            seed=cfg.seed)
    rows = []
    for name in ec.codes:
        code = build_from_spec(cfg.codes[name])
        for n in ec.ns:
            for rho in ec.rhos:
                traces = {"unb": [], "bal": []}
                unb = find_lambda_unb(code, rho, n, settings, traces["unb"])
                bal = find_lambda_bal(code, rho, n, settings, traces["bal"])
                cp = characteristic_points(n, rho, code.rate)
                rows.append([name, n, f"{rho:g}", _cap(bal), _cap(unb),
                             _cap(cp.lambda_bal), _cap(cp.lambda_unb), _cap(cp.lambda_lim)])
                log.info("%s n=%d rho=%g: lambda_bal=%.4f lambda_unb=%.4f", name, n, rho, bal, unb)
                for kind, trace in traces.items():
                    _write_csv(os.path.join(out, f"exit_trace_{name}_n{n}_rho{rho:g}_{kind}.csv"),
                               ["gamma", "snr_in", "snr_out"],
                               [[f"{p.gamma:.6g}", f"{p.snr_in[0]:.6g}", f"{p.snr_out:.6g}"] for p in trace])
    _write_csv(os.path.join(out, "exit_points.csv"),
               ["code", "n", "rho", "lambda_bal", "lambda_unb",
                "theory_lambda_bal", "theory_lambda_unb", "theory_lambda_lim"], rows)
    _write_manifest(out, "exit", cfg)


def run_build_code(cfg: ExperimentConfig, out: str) -> None:
    spec = cfg.codes[cfg.build_code.code]
    code = build_from_spec(spec)
    if isinstance(code, LdpcCode):
        path, text = os.path.join(out, f"{spec.name}.alist"), to_alist(code)
    else:
        path, text = os.path.join(out, f"{spec.name}.sccc"), code.to_text()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    _write_manifest(out, "build-code", cfg, {"N": int(code.N), "L": int(code.L), "rate": code.rate})


COMMANDS = {"region": run_region, "ber": run_ber, "exit": run_exit, "build-code": run_build_code}


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="corrmac", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI experiment config")
        p.add_argument("--seed", type=_u64, help="overrides [global] seed")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = ExperimentConfig(seed=args.seed, codes=cfg.codes, region=cfg.region, ber=cfg.ber,
                                   exit=cfg.exit, build_code=cfg.build_code)
        section = {"region": cfg.region, "ber": cfg.ber, "exit": cfg.exit, "build-code": cfg.build_code}
        if section[args.command] is None:
            raise ConfigError(f"config has no [{args.command}] section")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](cfg, args.out)
    except Exception as exc:  # noqa: BLE001 - any failure past validation is a runtime error
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
