"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 resource cap exceeded,
4 numerical failure (non-finite output, eigen-solver failure).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analytics, full_sim, metrics, spectral, walk
from .io import (
    ConfigError,
    ExperimentConfig,
    NumericalError,
    parse_grid,
    provenance,
    write_csv,
    write_json,
    write_scaling_csv,
)
from .reduced_dynamics import evolve, noise_params, select_basis
from .trace import EvolutionTrace

log = logging.getLogger("grover_dephasing")

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_NUMERIC = 0, 2, 3, 4


def _meta_path(out: str) -> Path:
    return Path(out).with_suffix(Path(out).suffix + ".meta.json")


def _emit_trace(trace: EvolutionTrace, cfg: ExperimentConfig, **extra) -> None:
    if cfg.out is None:
        write_csv(trace, sys.stdout)
        return
    write_csv(trace, cfg.out)
    write_json(provenance(cfg, **extra), _meta_path(cfg.out))


def _scenario(cfg: ExperimentConfig):
    target_noisy = cfg.target_noisy or cfg.q > 0
    rate = cfg.q if (cfg.k == 0 and cfg.q > 0) else cfg.p
    spec = select_basis(cfg.n, cfg.k, cfg.kind, target_noisy)
    return spec, rate


def _simulate(cfg: ExperimentConfig, with_full: bool) -> dict:
    spec, rate = _scenario(cfg)
    m = np.arange(cfg.steps + 1)
    trace = evolve(spec, noise_params(spec, rate), cfg.steps)
    approx = analytics.approx_for(spec, rate, m)
    trace.columns["p_analytic"] = np.asarray(approx.value, dtype=float)
    summary = {
        "basis": spec.basis_kind.value,
        "rate": rate,
        "analytic_validity": approx.validity.value,
        "analytic_constraint": approx.constraint_note,
    }
    if with_full:
        full = full_sim.evolve_full(cfg.n, full_sim.NoiseConfig.from_spec(spec, rate), cfg.steps)
        trace = full.merge(trace)
        summary["max_full_vs_reduced"] = float(np.max(np.abs(trace["p_full"] - trace["p_reduced"])))
        summary["max_full_vs_analytic"] = float(np.max(np.abs(trace["p_full"] - trace["p_analytic"])))
        print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    _emit_trace(trace, cfg, summary=summary)
    return summary


def _spectrum(cfg: ExperimentConfig) -> dict:
    report = spectral.verify_perturbation(cfg.n, cfg.p, cfg.q)
    payload = {**provenance(cfg), "spectrum": report.to_dict()}
    if cfg.out is None:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        write_json(payload, cfg.out)
    return payload


def _scaling(cfg: ExperimentConfig) -> dict:
    grid = metrics.GridConfig(
        n_values=parse_grid(cfg.grid),
        noisy_count=metrics.k_power(cfg.mu) if cfg.mu is not None else cfg.k,
        p=cfg.p,
        q=cfg.q,
        kind=cfg.kind,
        mode=cfg.mode,
        scan_factor=cfg.scan_factor,
        workers=cfg.workers,
    )
    records = metrics.scaling_scan(grid)
    failed = [r for r in records if r.error]
    fit = metrics.fit_exponent(records)
    fit_json = {
        "beta": fit.beta,
        "stderr": fit.stderr,
        "n_range": list(fit.n_range),
        "failed_points": [{"N": r.n_elements, "error": r.error} for r in failed],
    }
    if cfg.out is None:
        write_scaling_csv(records, sys.stdout)
    else:
        write_scaling_csv(records, cfg.out)
        write_json({**provenance(cfg), "fit": fit_json}, _meta_path(cfg.out))
    print(json.dumps(fit_json, sort_keys=True), file=sys.stderr)
    return fit_json


def _walk(cfg: ExperimentConfig) -> dict:
    ws = walk.StarWalkSpec.first_k(cfg.n, cfg.k, walk.PhaseDensity.uniform(cfg.a))
    trace = walk.simulate_walk_averaged(ws, cfg.steps)
    spec, noise = walk.map_walk_to_grover(ws)
    trace = trace.merge(evolve(spec, noise, cfg.steps))
    if cfg.shots > 0:
        trace = trace.merge(walk.simulate_walk_montecarlo(ws, cfg.steps, cfg.shots, cfg.seed))
    summary = {
        "p": walk.averaged_dephasing_factor(ws.phase_density),
        "max_walk_vs_reduced": float(np.max(np.abs(trace["p_walk"] - trace["p_reduced"]))),
        "seed": cfg.seed,
    }
    _emit_trace(trace, cfg, summary=summary)
    return summary


def run(cfg: ExperimentConfig) -> int:
    """Execute one experiment; returns the process exit status."""
    try:
        cfg.validate()
        if cfg.command == "simulate":
            _simulate(cfg, with_full=False)
        elif cfg.command == "compare":
            _simulate(cfg, with_full=True)
        elif cfg.command == "spectrum":
            _spectrum(cfg)
        elif cfg.command == "scaling":
            _scaling(cfg)
        else:
            _walk(cfg)
    except full_sim.ResourceLimitError as exc:
        log.error("%s", exc)
        return EXIT_RESOURCE
    except (NumericalError, spectral.ConvergenceError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="grover-dephasing", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with config values; flags override it")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--p", type=float, default=None, help="dephasing rate on noisy normals")
        p.add_argument("--q", type=float, default=None, help="dephasing rate on the target")
        p.add_argument("--kind", choices=["coupled", "decoupled"], default=None)

    for name in ("simulate", "compare"):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--steps", type=int, default=None)
        p.add_argument("--target-noisy", action="store_const", const=True, default=None)

    p = sub.add_parser("spectrum")
    common(p)
    p.add_argument("--n", type=int, default=None)

    p = sub.add_parser("scaling")
    common(p)
    p.add_argument("--grid", default=None, help="e.g. 2^6..2^16 or 64,128,256")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--mu", type=float, default=None, help="use k = ceil(N**mu)")
    p.add_argument("--mode", choices=["fixed_m0", "minimized"], default=None)
    p.add_argument("--scan-factor", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("walk")
    common(p)
    p.add_argument("--n", type=int, default=None, help="number of spokes")
    p.add_argument("--k", type=int, default=None, help="faulty spokes 2..k+1")
    p.add_argument("--a", type=float, default=None, help="uniform phase half-width")
    p.add_argument("--steps", type=int, default=None, help="Grover steps (walk steps / 2)")
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    return ap


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from exc
        data = ExperimentConfig.from_json(
            json.dumps({**json.loads(text), "command": args.command})
        ).to_dict()
    data["command"] = args.command
    for key, value in vars(args).items():
        if key in ("config", "verbose", "command") or value is None:
            continue
        data[key] = value
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
    except (ConfigError, json.JSONDecodeError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
