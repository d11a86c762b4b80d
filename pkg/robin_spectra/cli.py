"""
Command-line front end.

Usage:
    robin-spectra enclosure --a 2 --q 0.5,1,2 --out-dir out/
    robin-spectra stability --a 0 --potential v.json
    robin-spectra hardy weights --q 0.5 --n-max 100 --output w.csv
    robin-spectra figures --all --out-dir figs/

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

import argparse
import cmath
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from . import __version__
from .config import RunConfig, parse_complex, parse_float_list, resolve_threads
from .data_io import (
    dumps_json,
    load_potential,
    write_json,
    write_polylines_csv,
    write_table_csv,
    write_weight_table,
)
from .enclosure import (
    DEFAULT_DELTA,
    DEFAULT_GRID,
    WITNESS_TOL,
    construct_optimality_witness,
    real_boundary_near_misses,
    real_boundary_points,
    refine_boundary_point,
    trace_boundary,
)
from .errors import ConvergenceFailure, InputError, NotOnBoundary, NumericalError, ParamError
from .figures import FIGURE_PRESETS, render_enclosure_svg, render_presets
from .hardy import (
    GeneratorSequence,
    HardyWeight,
    certificate_report,
    identity_terms,
    neumann_criticality_demo,
    opt3_search,
    q_max,
)
from .lattice import Potential, SpectralPoint, as_coupling, build_truncation, inverse_joukowski
from .resolvent import g_a, gamma_a, get_evaluator, sup_attaining_sites
from .spectra import (
    MAX_DENSE_SIZE,
    count_outside_band,
    critical_operator_spectrum,
    orthopoly_zeros,
    rank_one_eigenvalues_exact,
    truncation_spectrum,
)
from .stability import (
    MAX_SECTION,
    POWER_TOL,
    TAIL_HS_TARGET,
    hardy_pointwise_condition,
    reflected_coupling,
    verdict,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _emit(obj: Any, output: Optional[str]) -> None:
    """Write JSON to ``output`` or to stdout."""
    if output:
        path = write_json(output, obj)
        print(f"✓ Wrote {path}")
    else:
        sys.stdout.write(dumps_json(obj))


def _potential(args) -> Potential:
    if getattr(args, "potential", None):
        return load_potential(args.potential)
    return Potential.zero()


def cmd_enclosure(args, cfg: RunConfig) -> int:
    out_dir = Path(cfg.out_dir)
    for Q in cfg.Q:
        curve = trace_boundary(cfg.a, Q, cfg.grid, cfg.delta, cfg.threads, cfg.cutoff)
        path = write_polylines_csv(out_dir / f"enclosure_Q{Q:g}.csv", curve.polylines)
        print(f"✓ Q = {Q:g}: {len(curve.polylines)} polyline(s), {curve.vertex_count} vertices -> {path}")
        svg = render_enclosure_svg([curve], out_dir / f"enclosure_Q{Q:g}.svg")
        print(f"✓ Figure saved to: {svg}")
    return EXIT_OK


def cmd_green(args, cfg: RunConfig) -> int:
    if args.k is not None:
        point = SpectralPoint.from_k(parse_complex(args.k))
    elif args.z is not None:
        point = inverse_joukowski(parse_complex(args.z))
    else:
        raise InputError("green needs --z or --k")
    coupling = as_coupling(cfg.a)
    evaluator = get_evaluator(coupling)
    report: Dict[str, Any] = {
        "a": coupling.a,
        "k": point.k,
        "z": point.z,
        "g_a": g_a(point, coupling, cfg.cutoff),
        "gamma_a": gamma_a(point, coupling, cfg.cutoff),
        "sup_sites": sup_attaining_sites(point, coupling, cutoff=cfg.cutoff)[:20],
    }
    if args.size:
        G = evaluator.matrix(point, args.size)
        report["matrix"] = [[complex(v) for v in row] for row in G]
    else:
        report["entry"] = {"m": args.m, "n": args.n, "value": evaluator.entry(point, args.m, args.n)}
    _emit(report, args.output)
    return EXIT_OK


def _weight_from_args(args, cfg: RunConfig) -> HardyWeight:
    if args.kind == "classical":
        return HardyWeight.classical()
    if args.kind == "robin":
        return HardyWeight.robin(cfg.q, float(cfg.a.real))
    return HardyWeight.power(cfg.q)


def cmd_hardy(args, cfg: RunConfig) -> int:
    action = args.hardy_command
    if action == "weights":
        w = _weight_from_args(args, cfg)
        values = w.values(args.n_max)
        if args.output:
            path = write_weight_table(args.output, values)
            print(f"✓ {w.label}: {args.n_max} weights -> {path}")
        else:
            sys.stdout.write("n,w_n\n")
            for n, value in enumerate(values, start=1):
                sys.stdout.write(f"{n},{float(value)!r}\n")
    elif action == "certify":
        reports = [certificate_report(cfg.q, int(N), cfg.threads) for N in args.levels]
        _emit({"q": cfg.q, "certificates": reports}, args.output)
    elif action == "identity":
        rng = np.random.default_rng(cfg.seed)
        g = GeneratorSequence.power(cfg.q)
        records = []
        for _ in range(args.samples):
            size = int(rng.integers(1, args.support + 1))
            u = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            terms = identity_terms(u, g)
            records.append({"support": size, "dirichlet": terms.dirichlet, "hardy": terms.hardy,
                            "remainder": terms.remainder, "residual": terms.residual})
        worst = max(r["residual"] for r in records)
        _emit({"q": cfg.q, "seed": cfg.seed, "max_residual": worst, "samples": records}, args.output)
    elif action == "critical-neumann":
        rows = []
        for N in args.levels:
            form, target = neumann_criticality_demo(int(N))
            rows.append({"N": int(N), "form": form, "inverse_N": target})
        _emit({"ramps": rows}, args.output)
    return EXIT_OK


def cmd_stability(args, cfg: RunConfig) -> int:
    V = _potential(args)
    q = cfg.q if args.q is not None else None
    result = verdict(cfg.a, V, q, cfg.tail_hs_target, cfg.section_cap, cfg.power_tol)
    report = result.to_dict()
    b = reflected_coupling(cfg.a)
    q_used = q_max(b) if q is None else q
    report["hardy_condition"] = {
        "q": q_used,
        "c": cfg.c,
        "holds": hardy_pointwise_condition(b, V, q_used, cfg.c),
    }
    _emit(report, args.output)
    return EXIT_OK


def cmd_eigen(args, cfg: RunConfig) -> int:
    V = _potential(args)
    report = truncation_spectrum(cfg.a, V, cfg.N)
    out = report.to_dict()
    if args.margin is not None:
        out["outside_band"] = len(report.outside_band(args.margin))
        out["outside_band_winding"] = count_outside_band(build_truncation(cfg.a, V, cfg.N), args.margin)
    if not report.residual_ok:
        logger.warning("residual %.2e misses the contract", report.residual)
    _emit(out, args.output)
    return EXIT_OK


def cmd_witness(args, cfg: RunConfig) -> int:
    z = parse_complex(args.z)
    Q = cfg.Q[0]
    snapped = False
    try:
        witness = construct_optimality_witness(cfg.a, Q, z, cfg.witness_tol)
    except NotOnBoundary:
        if args.exact:
            raise
        # move z along its k-ray onto the boundary
        point = refine_boundary_point(cfg.a, Q, cmath.phase(inverse_joukowski(z).k))
        if point is None:
            raise
        logger.info("snapped %s to boundary point %s", z, point.z)
        witness = construct_optimality_witness(cfg.a, Q, point.z, cfg.witness_tol)
        snapped = True
    exact = rank_one_eigenvalues_exact(cfg.a, witness.omega, witness.n)
    report = witness.to_dict()
    report["requested_z"] = z
    report["snapped"] = snapped
    report["exact_distance"] = min((abs(e - witness.z) for e in exact), default=float("inf"))
    report["characteristic_residual"] = witness.characteristic_residual()
    size = witness.truncation_size() if args.verify_size is None else args.verify_size
    if size:
        _, distance = truncation_spectrum(cfg.a, witness.potential, size).nearest(witness.z)
        report["truncation"] = {"N": size, "distance": distance}
    elif args.verify_size is None:
        k_mod = abs(inverse_joukowski(witness.z).k)
        logger.warning("skipping the truncation check: |k| = %.6f needs more than %d sites", k_mod, MAX_DENSE_SIZE)
        report["truncation"] = {"N": None, "k_modulus": k_mod}
    _emit(report, args.output)
    return EXIT_OK


def cmd_figures(args, cfg: RunConfig) -> int:
    if args.all:
        names = None
    elif args.names:
        names = [n.strip() for n in args.names.split(",") if n.strip()]
    else:
        raise InputError(f"figures needs --all or --names (choose from {', '.join(FIGURE_PRESETS)})")
    results = render_presets(cfg.out_dir, names, cfg.grid, cfg.threads)
    for result in results:
        counts = ", ".join(f"Q={q:g}: {n}" for q, n in result.curve_counts.items())
        dot = " + red dot" if result.has_pole_dot else ""
        print(f"✓ {result.name}: {counts}{dot} -> {result.svg_path}")
    write_json(Path(cfg.out_dir) / "figures.json", [r.to_dict() for r in results])
    return EXIT_OK


def cmd_explore(args, cfg: RunConfig) -> int:
    action = args.explore_command
    if action == "real-boundary":
        Q = cfg.Q[0]
        report = {
            "a": as_coupling(cfg.a).a,
            "Q": Q,
            "points": real_boundary_points(cfg.a, Q),
            "near_misses": real_boundary_near_misses(cfg.a, Q, args.n_max),
        }
        _emit(report, args.output)
    elif action == "critical":
        spectrum = critical_operator_spectrum(args.N)
        zeros = orthopoly_zeros(args.N)
        shifted = np.sort(spectrum.eigenvalues.real) + 2
        report = {
            "N": args.N,
            "spectrum": spectrum.eigenvalues.real,
            "orthopoly_zeros": zeros,
            "max_mismatch": float(np.max(np.abs(np.sort(zeros) - shifted))),
        }
        _emit(report, args.output)
    elif action == "opt3":
        w = HardyWeight.power(cfg.q)
        rows = opt3_search(w, args.site, args.lengths)
        if args.output:
            path = write_table_csv(args.output, ["L", "ratio"], rows)
            print(f"✓ {len(rows)} windows -> {path}")
        else:
            _emit([{"L": L, "ratio": r} for L, r in rows], None)
    return EXIT_OK


def _int_list(text: str) -> List[int]:
    values = parse_float_list(text)
    if any(v != int(v) for v in values):
        raise InputError(f"expected integers, got {text!r}")
    return [int(v) for v in values]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--a", default="0", help="Robin coupling, e.g. 0.5 or 0+1.618i (default: 0)")
    parser.add_argument("--output", "-o", help="Output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robin-spectra",
        description="Spectral enclosures, Hardy weights and stability of discrete Robin Schrödinger operators",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v INFO, -vv DEBUG")
    parser.add_argument("--seed", type=int, default=0, help="Seed for randomised sampling (default: 0)")
    parser.add_argument("--threads", type=int, help="Worker threads (default: $ROBIN_SPECTRA_THREADS or CPU count)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enclosure", help="Trace enclosure curves and render an SVG")
    p.add_argument("--a", default="0")
    p.add_argument("--q", "--Q", dest="Q", default="0.5,1,2", help="Comma-separated budgets Q")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--cutoff", type=float, default=1e-14)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(handler=cmd_enclosure)

    p = sub.add_parser("green", help="Green kernel entries and the enclosure function at one point")
    _add_common(p)
    p.add_argument("--z")
    p.add_argument("--k")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--size", type=int, help="Emit the size x size section instead of one entry")
    p.set_defaults(handler=cmd_green)

    p = sub.add_parser("hardy", help="Hardy weights and certificates")
    hardy = p.add_subparsers(dest="hardy_command", required=True)
    h = hardy.add_parser("weights")
    _add_common(h)
    h.add_argument("--q", type=float, default=0.5)
    h.add_argument("--kind", choices=["power", "robin", "classical"], default="power")
    h.add_argument("--n-max", type=int, default=100)
    h = hardy.add_parser("certify")
    _add_common(h)
    h.add_argument("--q", type=float, default=0.5)
    h.add_argument("--N", dest="levels", type=_int_list, default=[100, 1000, 10000])
    h = hardy.add_parser("identity")
    _add_common(h)
    h.add_argument("--q", type=float, default=0.5)
    h.add_argument("--samples", type=int, default=100)
    h.add_argument("--support", type=int, default=50)
    h = hardy.add_parser("critical-neumann")
    _add_common(h)
    h.add_argument("--N", dest="levels", type=_int_list, default=[1, 10, 1000])
    p.set_defaults(handler=cmd_hardy)

    p = sub.add_parser("stability", help="Stability verdict for J_a + V")
    _add_common(p)
    p.add_argument("--potential", required=True, help="Potential JSON (.json or .json.gz)")
    p.add_argument("--q", type=float, help="Hardy exponent in (0, q_a] (default: q_a)")
    p.add_argument("--c", type=float, default=1.0, help="Constant of the pointwise condition |v_n| <= c w_n")
    p.add_argument("--section-cap", type=int, default=MAX_SECTION)
    p.add_argument("--tail-target", type=float, default=TAIL_HS_TARGET)
    p.add_argument("--power-tol", type=float, default=POWER_TOL)
    p.set_defaults(handler=cmd_stability)

    p = sub.add_parser("eigen", help="Eigenvalues of a finite section of J_a + V")
    _add_common(p)
    p.add_argument("--potential")
    p.add_argument("--N", type=int, default=400)
    p.add_argument("--margin", type=float, help="Also count eigenvalues farther than this from [-2, 2]")
    p.set_defaults(handler=cmd_eigen)

    p = sub.add_parser("witness", help="One-site potential realising a boundary point")
    _add_common(p)
    p.add_argument("--Q", "--q", dest="Q", default="1")
    p.add_argument("--z", required=True)
    p.add_argument("--tol", type=float, default=WITNESS_TOL)
    p.add_argument(
        "--verify-size",
        type=int,
        default=None,
        help="Section size of the truncation check (default: from |k|; 0 skips it)",
    )
    p.add_argument("--exact", action="store_true", help="Fail instead of moving z onto the boundary")
    p.set_defaults(handler=cmd_witness)

    p = sub.add_parser("figures", help="Render the preset enclosure figures")
    p.add_argument("--all", action="store_true")
    p.add_argument("--names", help=f"Comma-separated subset of {', '.join(FIGURE_PRESETS)}")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(handler=cmd_figures)

    p = sub.add_parser("explore", help="Exploratory experiments")
    explore = p.add_subparsers(dest="explore_command", required=True)
    e = explore.add_parser("real-boundary")
    _add_common(e)
    e.add_argument("--Q", "--q", dest="Q", default="1")
    e.add_argument("--n-max", type=int, default=20)
    e = explore.add_parser("critical")
    _add_common(e)
    e.add_argument("--N", type=int, default=50)
    e = explore.add_parser("opt3")
    _add_common(e)
    e.add_argument("--q", type=float, default=0.5)
    e.add_argument("--site", type=int, default=1)
    e.add_argument("--lengths", type=_int_list, default=[10, 100, 1000])
    p.set_defaults(handler=cmd_explore)
    return parser


def config_from_args(args) -> RunConfig:
    """Collect parsed arguments into a RunConfig, validating as we go."""
    cfg = RunConfig(seed=args.seed)
    cfg.threads = resolve_threads(args.threads)
    if getattr(args, "a", None) is not None:
        cfg.a = parse_complex(args.a)
    if isinstance(getattr(args, "Q", None), str):
        cfg.Q = parse_float_list(args.Q)
        if any(Q <= 0 for Q in cfg.Q):
            raise ParamError(f"budgets Q must be positive, got {cfg.Q}")
    if isinstance(getattr(args, "q", None), float):
        cfg.q = args.q
    for name in ("grid", "delta", "cutoff", "N"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "c", None) is not None:
        if args.c <= 0:
            raise ParamError(f"c must be positive, got {args.c}")
        cfg.c = args.c
    for name, attr in (("section_cap", "section_cap"), ("tail_target", "tail_hs_target"), ("power_tol", "power_tol")):
        value = getattr(args, name, None)
        if value is not None:
            if value <= 0:
                raise ParamError(f"--{name.replace('_', '-')} must be positive, got {value}")
            setattr(cfg, attr, value)
    if getattr(args, "tol", None) is not None:
        cfg.witness_tol = args.tol
    if getattr(args, "out_dir", None) is not None:
        cfg.out_dir = args.out_dir
    if getattr(args, "potential", None) is not None:
        cfg.potential_path = args.potential
    return cfg


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("robin_spectra").setLevel(level)


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args.verbose)
    handler: Callable = args.handler
    try:
        cfg = config_from_args(args)
        return handler(args, cfg)
    except ConvergenceFailure as exc:
        print(f"Numerical error: {exc}", file=sys.stderr)
        if exc.partial is not None:
            print(f"Partial result: {exc.partial!r}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NumericalError as exc:
        print(f"Numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, FileNotFoundError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
