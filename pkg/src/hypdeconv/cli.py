"""Command-line front end: simulation, deconvolution, rate experiments, and
the impedance workflow.

Every run writes a JSON manifest holding the resolved parameters, seed, and
output file list, sufficient to reproduce the run bit-exactly with the same
binary (`hypdeconv rerun manifest.json`).  Exit codes: 0 success, 2 usage
error, 3 numerical failure (machine-readable JSON on stderr).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .deconv import (AmplificationError, DeconvConfig, cv_cutoff, default_cv_grid,
                     estimate_radial, mise, rate_cutoff_gaussian, rate_cutoff_laplace)
from .distributions import (ErrorModel, GaussianError, LaplaceError, NegativityError,
                            apply_error, gaussian_radial, sample_gaussian_h,
                            sample_gaussian_sl2, sample_laplace, sample_laplace_sl2)
from .hft import ConjugateSymmetryError, Sample
from .impedance import (MeasurementSet, PolarMesh, deconvolve_impedances,
                        estimate_dispersion, simulate_resistor_capacitor)
from .specfun import ConicalAccuracyError

_FMT = "%.17g"
_NUMERICAL_ERRORS = (AmplificationError, NegativityError, ConicalAccuracyError,
                     ConjugateSymmetryError, FloatingPointError)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HYPDECONV_THREADS", "1")))
    except ValueError:
        return 1


def _parse_error_spec(spec: str) -> ErrorModel:
    kind, _, rest = spec.partition(":")
    if kind == "gaussian":
        return GaussianError(float(rest))
    if kind == "laplace":
        alpha, tau = (float(x) for x in rest.split(","))
        return LaplaceError(alpha, tau)
    raise ValueError(f"unknown error spec {spec!r}; use gaussian:RHO or laplace:ALPHA,TAU")


def _write_manifest(out_dir, command, parameters, outputs, diagnostics):
    manifest = {
        "command": command,
        "parameters": parameters,
        "seed": parameters.get("seed"),
        "versions": {"hypdeconv": __version__, "numpy": np.__version__},
        "outputs": sorted(outputs),
        "diagnostics": diagnostics,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def run_simulate(params: dict, out_dir: str):
    n, seed = params["n"], params["seed"]
    ss = np.random.SeedSequence(seed)
    child_x, child_eps = ss.spawn(2)
    if params["dist"] == "gaussian":
        xs = sample_gaussian_h(params["rho"], n, child_x)
    else:
        xs = sample_laplace(params["alpha"], params["tau"], n, child_x)
    err = params["error"]
    if err["kind"] == "gaussian":
        eps = sample_gaussian_sl2(err["rho"], n, child_eps)
    else:
        eps = sample_laplace_sl2(err["alpha"], err["tau"], n, child_eps)
    ys = apply_error(eps, xs)
    xs.to_csv(os.path.join(out_dir, "x_sample.csv"))
    ys.to_csv(os.path.join(out_dir, "y_sample.csv"))
    return ["x_sample.csv", "y_sample.csv"], {"n": n}


# ---------------------------------------------------------------------------
# deconvolve
# ---------------------------------------------------------------------------

def _resolve_cutoff(cutoff: str, sample: Sample, error: ErrorModel):
    n = len(sample)
    if cutoff.startswith("fixed:"):
        return float(cutoff.split(":", 1)[1]), "fixed"
    if cutoff == "rate":
        desc = error.describe()
        if desc["kind"] == "gaussian":
            return rate_cutoff_gaussian(n, desc["rho"]), "rate"
        return rate_cutoff_laplace(n, desc["alpha"]), "rate"
    if cutoff == "cv":
        desc = error.describe()
        if desc["kind"] == "gaussian":
            grid = default_cv_grid(n, desc["rho"])
        else:
            grid = np.geomspace(0.5, rate_cutoff_laplace(n, desc["alpha"]) + 2.0, 40)
        return cv_cutoff(sample, error, grid), "cv"
    raise ValueError(f"unknown cutoff {cutoff!r}; use cv, rate, or fixed:T")


def run_deconvolve(params: dict, out_dir: str):
    sample = Sample.from_csv(params["input"])
    error = _parse_error_spec(params["error"])
    T, rule = _resolve_cutoff(params["cutoff"], sample, error)
    r_grid = np.linspace(0.0, params["r_max"], params["r_points"])
    cfg = DeconvConfig(cutoff_T=T, error=error, t_nodes=params["t_nodes"], r_grid=r_grid)
    result = estimate_radial(sample, cfg)
    truth_col = None
    if params.get("truth"):
        kind, _, rest = params["truth"].partition(":")
        if kind != "gaussian":
            raise ValueError("only gaussian:RHO truth columns are supported")
        truth_col = gaussian_radial(float(rest), r_grid)
    rows = []
    for i, (r, v) in enumerate(zip(r_grid, result.estimate.values)):
        row = [_FMT % r, _FMT % v]
        if truth_col is not None:
            row.append(_FMT % truth_col[i])
        rows.append(row)
    header = ["r", "estimate"] + (["truth"] if truth_col is not None else [])
    _write_csv(os.path.join(out_dir, "estimate.csv"), header, rows)
    diags = dict(result.diagnostics)
    diags.update({"cutoff_used": result.cutoff_used, "cutoff_rule": rule})
    return ["estimate.csv"], diags


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------

def _one_replication(n, rho_x, error, cutoff, t_nodes, r_grid, truth, seed_pair):
    xs = sample_gaussian_h(rho_x, n, seed_pair[0])
    desc = error.describe()
    if desc["kind"] == "gaussian":
        eps = sample_gaussian_sl2(desc["rho"], n, seed_pair[1])
    else:
        eps = sample_laplace_sl2(desc["alpha"], desc["tau"], n, seed_pair[1])
    ys = apply_error(eps, xs)
    T, _ = _resolve_cutoff(cutoff, ys, error)
    cfg = DeconvConfig(cutoff_T=T, error=error, t_nodes=t_nodes, r_grid=r_grid)
    result = estimate_radial(ys, cfg)
    return mise(result.estimate, truth), T


def run_rates(params: dict, out_dir: str):
    from .distributions import gaussian_radial_density

    rho_x = params["rho"]
    error = (_parse_error_spec(params["error"]) if params.get("error")
             else GaussianError(params["rho_eps"]))
    truth = gaussian_radial_density(rho_x)
    r_grid = np.linspace(0.0, float(truth.r_grid[-1]), params["r_points"])
    ss = np.random.SeedSequence(params["seed"])
    rows = []
    cutoffs = {}
    for n in params["n_list"]:
        reps = params["reps"]
        seeds = [tuple(c.spawn(2)) for c in ss.spawn(reps)]
        work = [(n, rho_x, error, params["cutoff"], params["t_nodes"], r_grid,
                 truth, sp) for sp in seeds]
        threads = _threads()
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(lambda a: _one_replication(*a), work))
        else:
            results = [_one_replication(*a) for a in work]
        mises = np.array([r[0] for r in results])
        cutoffs[str(n)] = [r[1] for r in results]
        if reps == 1:
            rows.append([str(n), _FMT % mises[0]])
        else:
            q25, q50, q75 = np.percentile(mises, [25, 50, 75])
            rows.append([str(n), _FMT % q50, _FMT % (q75 - q25)])
    header = ["n", "median_mise"] + ([] if params["reps"] == 1 else ["iqr"])
    _write_csv(os.path.join(out_dir, "rates.csv"), header, rows)
    return ["rates.csv"], {"cutoffs": cutoffs}


# ---------------------------------------------------------------------------
# impedance
# ---------------------------------------------------------------------------

def run_impedance(params: dict, out_dir: str):
    rejected_rows = []
    if params.get("simulate_n"):
        sim = simulate_resistor_capacitor(params["simulate_n"],
                                          params["rho_eps_value"] or 4e-4,
                                          params["seed"])
        ms = sim.measurements
        ms.to_csv(os.path.join(out_dir, "measurements.csv"))
        extra = ["measurements.csv"]
    else:
        ms, rejected_rows = MeasurementSet.from_csv(params["input"])
        extra = []
    if params["rho_eps"] == "estimate":
        zc_probe = complex(np.mean(ms.z))
        rho_eps = estimate_dispersion(1j * ms.z / zc_probe)
    else:
        rho_eps = params["rho_eps_value"]
    mesh = PolarMesh(
        2.0 * math.pi * np.arange(params["mesh_angles"]) / params["mesh_angles"],
        np.geomspace(params["mesh_r_min"], params["mesh_r_max"], params["mesh_radii"]))
    zc = params["zc"] if params["zc"] == "euclidean-mean" else complex(params["zc"])
    result = deconvolve_impedances(ms, rho_eps, mesh=mesh, zc=zc,
                                   cutoff=params["cutoff"], t_nodes=params["t_nodes"],
                                   k_nodes=params["k_nodes"])
    names = result.write_csvs(out_dir)
    diags = {
        "z_c": {"re": result.z_c.real, "im": result.z_c.imag},
        "rho_eps": result.rho_eps,
        "mesh": result.mesh.describe(),
        "cutoff_used": result.cutoff_used,
        "n_used": result.n_used,
        "rejected_count": result.rejected + len(rejected_rows),
        "rejected_rows": [[int(l), r] for l, r in rejected_rows],
    }
    return extra + names, diags


COMMANDS = {
    "simulate": run_simulate,
    "deconvolve": run_deconvolve,
    "rates": run_rates,
    "impedance": run_impedance,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypdeconv",
        description="Density deconvolution on the hyperbolic upper half plane")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw corrupted samples")
    p.add_argument("--dist", choices=["gaussian", "laplace"], required=True)
    p.add_argument("--rho", type=float, help="dispersion of the gaussian signal")
    p.add_argument("--alpha", type=float, help="laplace signal exponent")
    p.add_argument("--tau", type=float, help="laplace signal shift")
    p.add_argument("--rho-eps", type=float, help="gaussian corruption dispersion")
    p.add_argument("--error", help="corruption spec gaussian:RHO or laplace:ALPHA,TAU")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("deconvolve", help="estimate the signal density from a sample")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--error", required=True,
                   help="error spec gaussian:RHO or laplace:ALPHA,TAU")
    p.add_argument("--cutoff", default="cv", help="cv, rate, or fixed:T")
    p.add_argument("--r-max", type=float, default=5.0)
    p.add_argument("--r-points", type=int, default=161)
    p.add_argument("--t-nodes", type=int, default=256)
    p.add_argument("--truth", help="optional truth column, gaussian:RHO")
    p.add_argument("--out", required=True)

    p = sub.add_parser("rates", help="replicate estimation error across sample sizes")
    p.add_argument("--n-list", required=True, help="comma-separated sample sizes")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--rho-eps", type=float)
    p.add_argument("--error", help="overrides --rho-eps, gaussian:RHO or laplace:ALPHA,TAU")
    p.add_argument("--cutoff", default="cv", help="cv, rate, or fixed:T")
    p.add_argument("--t-nodes", type=int, default=192)
    p.add_argument("--r-points", type=int, default=121)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("impedance", help="deconvolve impedance measurements on a mesh")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--in", dest="input")
    src.add_argument("--simulate-fulda", dest="simulate_n", type=int, metavar="N",
                     help="generate a synthetic resistor-through-capacitor data set")
    p.add_argument("--rho-eps", default="0.0004",
                   help="corruption dispersion, a number or 'estimate'")
    p.add_argument("--zc", default="euclidean-mean",
                   help="characteristic impedance: euclidean-mean or a complex value")
    p.add_argument("--mesh", default="16,24,0.01,1.5",
                   help="ANGLES,RADII[,RMIN,RMAX]")
    p.add_argument("--cutoff", default="rate", help="rate, cv, or a number")
    p.add_argument("--t-nodes", type=int, default=256)
    p.add_argument("--k-nodes", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rerun", help="re-execute a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    return parser


def _simulate_params(args, parser) -> dict:
    if args.n < 1:
        parser.error("--n must be at least 1")
    if args.dist == "gaussian":
        if args.rho is None:
            parser.error("--dist gaussian requires --rho")
        dist_params = {"rho": args.rho}
    else:
        if args.alpha is None or args.tau is None:
            parser.error("--dist laplace requires --alpha and --tau")
        dist_params = {"alpha": args.alpha, "tau": args.tau}
    if args.error:
        error = _parse_error_spec(args.error).describe()
    elif args.rho_eps is not None:
        error = {"kind": "gaussian", "rho": args.rho_eps}
    else:
        parser.error("provide --rho-eps or --error")
    return {"dist": args.dist, **dist_params, "error": error,
            "n": args.n, "seed": args.seed}


def _impedance_params(args, parser) -> dict:
    try:
        parts = args.mesh.split(",")
        mesh_angles, mesh_radii = int(parts[0]), int(parts[1])
        mesh_r_min = float(parts[2]) if len(parts) > 2 else 0.01
        mesh_r_max = float(parts[3]) if len(parts) > 3 else 1.5
    except (ValueError, IndexError):
        parser.error("--mesh must be ANGLES,RADII[,RMIN,RMAX]")
    if args.rho_eps == "estimate":
        rho_eps, rho_val = "estimate", None
    else:
        try:
            rho_val = float(args.rho_eps)
        except ValueError:
            parser.error("--rho-eps must be a number or 'estimate'")
        if rho_val <= 0:
            parser.error("--rho-eps must be positive")
        rho_eps = "fixed"
    cutoff = args.cutoff
    if cutoff not in ("rate", "cv"):
        try:
            cutoff = float(cutoff)
        except ValueError:
            parser.error("--cutoff must be rate, cv, or a number")
    return {"input": args.input, "simulate_n": args.simulate_n,
            "rho_eps": rho_eps, "rho_eps_value": rho_val, "zc": args.zc,
            "mesh_angles": mesh_angles, "mesh_radii": mesh_radii,
            "mesh_r_min": mesh_r_min, "mesh_r_max": mesh_r_max,
            "cutoff": cutoff, "t_nodes": args.t_nodes, "k_nodes": args.k_nodes,
            "seed": args.seed}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "rerun":
        with open(args.manifest) as fh:
            manifest = json.load(fh)
        command, params = manifest["command"], manifest["parameters"]
    else:
        command = args.command
        if command == "simulate":
            params = _simulate_params(args, parser)
        elif command == "deconvolve":
            params = {"input": args.input, "error": args.error, "cutoff": args.cutoff,
                      "r_max": args.r_max, "r_points": args.r_points,
                      "t_nodes": args.t_nodes, "truth": args.truth, "seed": None}
        elif command == "rates":
            try:
                n_list = [int(x) for x in args.n_list.split(",")]
            except ValueError:
                parser.error("--n-list must be comma-separated integers")
            if args.error is None and args.rho_eps is None:
                parser.error("provide --rho-eps or --error")
            params = {"n_list": n_list, "reps": args.reps, "rho": args.rho,
                      "rho_eps": args.rho_eps, "error": args.error,
                      "cutoff": args.cutoff, "t_nodes": args.t_nodes,
                      "r_points": args.r_points, "seed": args.seed}
        else:
            params = _impedance_params(args, parser)

    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    started = time.perf_counter()
    try:
        outputs, diagnostics = COMMANDS[command](params, out_dir)
    except _NUMERICAL_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 3
    outputs = outputs + ["manifest.json"]
    _write_manifest(out_dir, command, params, outputs, diagnostics)
    # timing goes to stderr only: manifests must be byte-stable across reruns
    print(f"{command}: wrote {len(outputs)} files to {out_dir} "
          f"in {time.perf_counter() - started:.2f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
