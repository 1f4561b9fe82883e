"""Command-line surface: every computation as a subcommand with
reproducible, machine-readable output.

Exit codes: 0 success, 1 flagged computational anomaly (e.g. a solve that
did not converge), 2 usage errors.  All randomized runs are reproducible
from --seed, and results are independent of --threads (the pool only runs
independent instances; reduction order is fixed).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, carpet, graph, regularity, scaling, sobolev
from . import emeasure as emeasure_mod
from . import solve as solve_mod

FACE_PAIRS = {"LR": ("L", "R"), "TB": ("T", "B")}


def _pmap(fn, items, threads):
    """Order-preserving map over independent instances."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _fmt17(x) -> str:
    return f"{float(x):.17g}"


def _emit(args, payload: dict, csv_rows=None, csv_header=None) -> None:
    """Write JSON (with provenance) or CSV to --out / stdout."""
    if args.format == "json":
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        lines = []
        if csv_header:
            lines.append(",".join(csv_header))
        for row in csv_rows or []:
            lines.append(
                ",".join(_fmt17(c) if isinstance(c, float) else str(c) for c in row)
            )
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _provenance(args, level, rho=None) -> dict:
    return {
        "p": getattr(args, "p", None),
        "level": level,
        "rho": rho,
        "seed": args.seed,
        "tool_version": __version__,
    }


def _tols(args) -> dict:
    out = {}
    if args.tol_residual is not None:
        out["residual_tol"] = args.tol_residual
    if args.tol_energy is not None:
        out["energy_rel_tol"] = args.tol_energy
    if args.max_iters is not None:
        out["max_iters"] = args.max_iters
    return out


def _rho_or_estimate(args, p):
    """--rho if given, else a cheap on-the-fly estimate (always recorded)."""
    if args.rho is not None:
        return args.rho, "flag"
    report = scaling.estimate_rho(p, n_max=3)
    return report.rho, "estimated(n_max=3)"


def _suite_function(name: str, m: int, seed: int, p: float):
    if name == "x":
        return carpet.cell_centers(m)[0]
    if name == "y":
        return carpet.cell_centers(m)[1]
    if name == "xy":
        x, y = carpet.cell_centers(m)
        return x * y
    if name == "random":
        return np.random.default_rng(seed).uniform(size=carpet.NUM_CHILDREN**m)
    if name == "face":
        G = graph.build_graph(m)
        _, sol = solve_mod.capacity(
            G, carpet.face_codes(m, "L"), carpet.face_codes(m, "R"), None, p
        )
        return sol.values.values
    raise ValueError(f"unknown function {name!r}")


def _center_code(args, n: int) -> int:
    word = args.center if args.center else "2" * n
    w = carpet.Word.from_string(word)
    if w.level != n:
        raise ValueError(f"--center {word!r} is not a level-{n} word")
    return w.code


# --- subcommands ----------------------------------------------------------

def cmd_graph(args) -> int:
    G = graph.build_graph(args.level, args.flavor)
    from scipy.sparse.csgraph import connected_components

    ncomp, _ = connected_components(G.adjacency_matrix(), directed=False)
    degrees = G.degrees()
    payload = {
        "provenance": _provenance(args, args.level),
        "flavor": G.flavor,
        "vertices": int(G.n_vertices),
        "edges": int(G.n_edges),
        "corner_edges": int(G.edge_is_corner.sum()),
        "max_degree": int(degrees.max()),
        "degree_histogram": {
            str(d): int(c) for d, c in enumerate(np.bincount(degrees)) if c
        },
        "connected": bool(ncomp == 1),
    }
    _emit(args, payload, [(k, v) for k, v in payload.items() if k != "provenance"],
          ("field", "value"))
    return 0


def cmd_capacity(args) -> int:
    f1, f2 = FACE_PAIRS[args.faces]
    G = graph.build_graph(args.level)
    value, sol = solve_mod.capacity(
        G,
        carpet.face_codes(args.level, f1),
        carpet.face_codes(args.level, f2),
        None,
        args.p,
        **_tols(args),
    )
    payload = {
        "provenance": _provenance(args, args.level),
        "faces": args.faces,
        "value": value,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
    }
    if args.save_values:
        graph.save_function(args.save_values, sol.values)
    _emit(args, payload, [("capacity", value), ("residual", sol.residual)],
          ("field", "value"))
    return 0 if sol.converged else 1


def cmd_modulus(args) -> int:
    f1, f2 = FACE_PAIRS[args.faces]
    G = graph.build_graph(args.level)
    result = solve_mod.vertex_modulus(
        G,
        carpet.face_codes(args.level, f1),
        carpet.face_codes(args.level, f2),
        None,
        args.p,
        eps_path=args.eps_path,
    )
    payload = {
        "provenance": _provenance(args, args.level),
        "faces": args.faces,
        "value": result.value,
        "gap": result.certificate_gap,
        "n_active_paths": len(result.active_paths),
        "lower_bound": result.lower_bound,
        "upper_bound": result.upper_bound,
        "converged": result.converged,
    }
    _emit(args, payload, [("modulus", result.value), ("gap", result.certificate_gap)],
          ("field", "value"))
    return 0 if result.converged else 1


def cmd_rho(args) -> int:
    levels = list(range(1, args.max_level + 1))
    caps = _pmap(lambda n: scaling.face_capacity(args.p, n), levels, args.threads)
    ratios = [caps[i] / caps[i + 1] for i in range(len(caps) - 1)]
    report = scaling.ScalingReport(
        p=args.p,
        levels=levels,
        face_caps=caps,
        rho_estimates=ratios,
        rho=ratios[-1],
        d_w=scaling.walk_dimension(ratios[-1]),
    )
    payload = {"provenance": _provenance(args, args.max_level, report.rho)}
    payload.update(report.to_dict())
    _emit(args, payload, report.csv_rows(), ("n", "face_cap", "ratio"))
    return 0


def cmd_harmonic(args) -> int:
    f1, f2 = FACE_PAIRS[args.faces]
    G = graph.build_graph(args.level)
    boundary = {int(i): 0.0 for i in carpet.face_codes(args.level, f1)}
    boundary.update({int(i): 1.0 for i in carpet.face_codes(args.level, f2)})
    domain = np.setdiff1d(
        np.arange(G.n_vertices), np.asarray(sorted(boundary), dtype=np.int64)
    )
    sol = solve_mod.solve_p_harmonic(
        solve_mod.DirichletProblem(
            graph=G, p=args.p, boundary=boundary, domain=domain, **_tols(args)
        )
    )
    payload = {
        "provenance": _provenance(args, args.level),
        "faces": args.faces,
        "energy": sol.energy,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
    }
    if args.save_values:
        graph.save_function(args.save_values, sol.values)
    _emit(args, payload, [("energy", sol.energy), ("residual", sol.residual)],
          ("field", "value"))
    return 0 if sol.converged else 1


def cmd_seminorm(args) -> int:
    rho, rho_src = _rho_or_estimate(args, args.p)
    f = _suite_function(args.function, args.level, args.seed, args.p)
    report = sobolev.seminorm_report(f, args.p, rho)
    payload = {
        "provenance": _provenance(args, args.level, rho),
        "rho_source": rho_src,
        "function": args.function,
        "levels": report.levels,
        "energies": report.energies,
        "seminorm": report.seminorm,
        "weak_monotonicity": report.weak_monotonicity,
    }
    _emit(args, payload, zip(report.levels, report.energies), ("n", "energy"))
    return 0


def cmd_ks(args) -> int:
    rho, rho_src = _rho_or_estimate(args, args.p)
    d_w = scaling.walk_dimension(rho)
    f = _suite_function(args.function, args.level, args.seed, args.p)
    G = graph.build_graph(args.level)
    lams = args.lam or [1, 2, 3]
    values = _pmap(
        lambda lam: sobolev.ks_energy(f, args.p, lam, d_w, graph=G),
        lams,
        args.threads,
    )
    payload = {
        "provenance": _provenance(args, args.level, rho),
        "rho_source": rho_src,
        "function": args.function,
        "d_w": d_w,
        "lambda": lams,
        "ks_energy": values,
    }
    _emit(args, payload, zip(lams, values), ("lambda", "ks_energy"))
    return 0


def cmd_poincare(args) -> int:
    rho, rho_src = _rho_or_estimate(args, args.p)
    d_w = scaling.walk_dimension(rho)
    result = sobolev.poincare_constant(args.level, args.p, d_w)
    payload = {
        "provenance": _provenance(args, args.level, rho),
        "rho_source": rho_src,
        "d_w": d_w,
        "constant": result["constant"],
        "attaining": result["attaining"],
    }
    _emit(args, payload, [("constant", result["constant"])], ("field", "value"))
    return 0


def cmd_emeasure(args) -> int:
    rho, rho_src = _rho_or_estimate(args, args.p)
    f = _suite_function(args.function, args.level, args.seed, args.p)
    table = emeasure_mod.energy_measure_table(f, args.p, rho, args.report_level)
    payload = {
        "provenance": _provenance(args, args.level, rho),
        "rho_source": rho_src,
        "function": args.function,
        "report_level": args.report_level,
        "total": table.total,
        "crossing_defect": table.crossing_defect,
        "masses": {w: m for w, m in table.csv_rows()},
    }
    _emit(args, payload, table.csv_rows(), ("word", "mass"))
    return 0


def cmd_harnack(args) -> int:
    center = _center_code(args, args.level)
    R = args.radius if args.radius else carpet.SUBDIVISION ** (args.level - 1)
    reports = regularity.harnack_report(
        args.level,
        args.p,
        center,
        R,
        delta_h=args.delta_h,
        trials=args.trials,
        seed=args.seed,
        **_tols(args),
    )
    ratios = [r.ratio for r in reports]
    payload = {
        "provenance": _provenance(args, args.level),
        "center": str(carpet.Word(args.level, center)),
        "R": R,
        "delta_h": args.delta_h,
        "trials": [r.to_dict() for r in reports],
        "max_ratio": max(ratios),
    }
    _emit(args, payload, [(r.label, r.ratio) for r in reports], ("label", "ratio"))
    return 0 if all(np.isfinite(ratios)) else 1


def cmd_cutoff(args) -> int:
    rho, rho_src = _rho_or_estimate(args, args.p)
    d_w = scaling.walk_dimension(rho)
    center = _center_code(args, args.level)
    # default radius keeps the Hoelder fit window non-degenerate (R >= 4)
    R = args.radius if args.radius else carpet.SUBDIVISION ** (args.level - 1)
    profile = regularity.cutoff_profile(
        args.level, args.p, center, R, d_w=d_w, seed=args.seed, **_tols(args)
    )
    payload = {"provenance": _provenance(args, args.level, rho), "rho_source": rho_src}
    payload.update(profile.to_dict())
    payload["center"] = str(carpet.Word(args.level, center))
    _emit(
        args,
        payload,
        [(d, o) for d, o in profile.hoelder_pairs],
        ("distance_over_R", "oscillation"),
    )
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    ok = run_selftest(verbose=True)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carpet-energy",
        description="Discrete p-energy computations on the planar Sierpinski carpet",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, level_flag="--level", level_default=None):
        sp.add_argument("--p", type=float, default=2.0)
        if level_flag:
            sp.add_argument(level_flag, type=int, default=level_default, dest=level_flag.strip("-").replace("-", "_"))
        sp.add_argument("--rho", type=float, default=None)
        sp.add_argument("--tol-residual", type=float, default=None)
        sp.add_argument("--tol-energy", type=float, default=None)
        sp.add_argument("--max-iters", type=int, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--out", default=None)

    sp = sub.add_parser("graph", help="build a level graph and report stats")
    common(sp, level_default=1)
    sp.add_argument("--flavor", choices=("touching", "edge_sharing"), default="touching")
    sp.set_defaults(fn=cmd_graph)

    sp = sub.add_parser("capacity", help="face-to-face p-capacity")
    common(sp, level_default=1)
    sp.add_argument("--faces", choices=tuple(FACE_PAIRS), default="LR")
    sp.add_argument("--save-values", default=None)
    sp.set_defaults(fn=cmd_capacity)

    sp = sub.add_parser("modulus", help="face-to-face vertex p-modulus")
    common(sp, level_default=1)
    sp.add_argument("--faces", choices=tuple(FACE_PAIRS), default="LR")
    sp.add_argument("--eps-path", type=float, default=1e-6)
    sp.set_defaults(fn=cmd_modulus)

    sp = sub.add_parser("rho", help="p-scaling factor from face-capacity ratios")
    common(sp, level_flag="--max-level", level_default=3)
    sp.set_defaults(fn=cmd_rho)

    sp = sub.add_parser("harmonic", help="p-harmonic face Dirichlet problem")
    common(sp, level_default=2)
    sp.add_argument("--faces", choices=tuple(FACE_PAIRS), default="LR")
    sp.add_argument("--save-values", default=None)
    sp.set_defaults(fn=cmd_harmonic)

    sp = sub.add_parser("seminorm", help="normalized energies and seminorm proxy")
    common(sp, level_default=3)
    sp.add_argument("--function", choices=("x", "y", "xy", "random", "face"), default="x")
    sp.set_defaults(fn=cmd_seminorm)

    sp = sub.add_parser("ks", help="Korevaar-Schoen energies")
    common(sp, level_default=3)
    sp.add_argument("--function", choices=("x", "y", "xy", "random", "face"), default="x")
    sp.add_argument("--lam", type=int, action="append", default=None)
    sp.set_defaults(fn=cmd_ks)

    sp = sub.add_parser("poincare", help="empirical Poincare constant")
    common(sp, level_default=3)
    sp.set_defaults(fn=cmd_poincare)

    sp = sub.add_parser("emeasure", help="energy-measure cell table")
    common(sp, level_default=3)
    sp.add_argument("--function", choices=("x", "y", "xy", "random", "face"), default="x")
    sp.add_argument("--report-level", type=int, default=1)
    sp.set_defaults(fn=cmd_emeasure)

    sp = sub.add_parser("harnack", help="Harnack ratios over sampled boundary data")
    common(sp, level_default=3)
    sp.add_argument("--center", default=None, help="center word, default 22...2")
    sp.add_argument("--radius", type=float, default=None)
    sp.add_argument("--delta-h", type=float, default=0.25)
    sp.add_argument("--trials", type=int, default=5)
    sp.set_defaults(fn=cmd_harnack)

    sp = sub.add_parser("cutoff", help="equilibrium cutoff profile")
    common(sp, level_default=3)
    sp.add_argument("--center", default=None, help="center word, default 22...2")
    sp.add_argument("--radius", type=float, default=None)
    sp.set_defaults(fn=cmd_cutoff)

    sp = sub.add_parser("selftest", help="run the exact-oracle suite")
    common(sp, level_flag=None)
    sp.set_defaults(fn=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "p"):
        try:
            solve_mod.check_p(args.p)
        except ValueError as exc:
            parser.error(str(exc))  # exits with code 2
    try:
        return args.fn(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
