"""Command-line driver: ``hausflow {run,verify,semigroup,finsler,oracle}``.

Exit codes::

    0  success (run: converged; verify: every property passed)
    1  runtime error
    2  invalid command line or config
    3  run: flow diverged
    4  run: iteration budget exhausted
    5  verify: at least one property failed
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import (
    check_finsler_bound,
    check_monotone,
    check_upper_bound,
    epsilon_midpoints,
    metric_axioms,
    random_core_pairs,
)
from .config import (
    build_base,
    build_generators,
    build_group,
    build_window,
    load_config,
    parse_number,
)
from .exceptions import ConfigError, EnvelopeInfiniteError, HausflowError
from .finsler import (
    default_sigma_sample,
    default_t_schedule,
    grid_translations,
    norm_table,
    right_invariance_defect,
    right_invariant_envelope,
    sup_equals_limsup_check,
)
from .flow import AdjacencySpec, run_flow
from .generators import GeneratorSet, check_isotropy_trivial
from .groups import AlgebraVector
from .io import SCHEMA_VERSION, load_field, save_field, write_json, write_rows_csv
from .oracle import CASES, write_case
from .semigroup import basis_vectors, check_bracket_generating, covering_radius, generate_words
from .window import WindowSpec, sample_window

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3
EXIT_MAX_ITER = 4
EXIT_VERIFY_FAILED = 5

_RUN_EXIT = {"converged": EXIT_OK, "diverged": EXIT_DIVERGED, "max_iter_reached": EXIT_MAX_ITER}

log = logging.getLogger("hausflow")


def _report(command, cfg, **body):
    return {"schema_version": SCHEMA_VERSION, "command": command, "config": cfg, **body}


def _setup(cfg):
    X = build_generators(cfg)
    win = build_window(cfg, X)
    return build_base(cfg), X, win


def _flow(cfg, base, X, win, retain="all"):
    f = cfg["flow"]
    return run_flow(
        base, X, win, AdjacencySpec(cfg["adjacency"]["stencil_radius"]), tol=f["tol"],
        max_iter=f["max_iter"], divergence_factor=f["divergence_factor"], patience=f["patience"],
        retain=retain, monotone_slack=f["monotone_slack"], enforce_monotone=f["enforce_monotone"],
        method=f["method"], threads=cfg["threads"],
    )


def cmd_run(cfg, out: Path):
    base, X, win = _setup(cfg)
    state = _flow(cfg, base, X, win, "all" if cfg["flow"]["save_iterates"] else "ends")
    out.mkdir(parents=True, exist_ok=True)
    save_field(state.limit, out / "limit")
    if cfg["flow"]["save_iterates"]:
        for n, it in enumerate(state.iterates):
            save_field(it, out / f"iterate_{n:03d}")
    write_rows_csv(
        out / "deltas.csv", ["iteration", "delta", "min_increment", "core_diameter"],
        [(n + 1, d, m, c) for n, (d, m, c) in
         enumerate(zip(state.deltas, state.min_increment, state.core_diameters[1:]))],
    )
    code = _RUN_EXIT[state.verdict.kind]
    report = _report("run", cfg, exit_code=code, n_generators=len(X), grid_points=len(state.limit.grid),
                     **state.to_report())
    write_json(out / "report.json", report)
    return code, report


def _directions(cfg, group):
    dirs = cfg["finsler"]["directions"]
    if dirs is not None:
        return [AlgebraVector(group, tuple(parse_number(c) for c in d)) for d in dirs]
    out = []
    for e in basis_vectors(group):
        out += [e, -e, e.scaled(2.0)]
    return out


def _finsler_inputs(cfg, X, win):
    f = cfg["finsler"]
    grid = sample_window(win, cfg["window"]["max_points"])
    cloud_X = X if f["sigma_maxlen"] > 0 and len(X) > 1 else None
    S = default_sigma_sample(grid, cloud_X, win, max(1, f["sigma_maxlen"]))
    scale = parse_number(f["schedule_scale"]) if f["schedule_scale"] is not None else win.scale
    ts = default_t_schedule(scale, f["schedule_length"])
    g = win.group
    bp = g.identity() if f["base_point"] is None else np.array([parse_number(c) for c in f["base_point"]])
    return S, ts, g.element(bp)


def _symmetry_checks(table, tol=1e-3):
    out = []
    ests = table.estimates
    for i, a in enumerate(ests):
        for b in ests[i + 1 :]:
            if a.diverged or b.diverged:
                continue
            if np.allclose(a.direction.array, -b.direction.array):
                gap = abs(a.value - b.value)
                out.append({"direction": list(a.direction.components), "gap": gap, "ok": gap <= tol})
    return out


def cmd_finsler(cfg, out: Path):
    base, X, win = _setup(cfg)
    S, ts, g = _finsler_inputs(cfg, X, win)
    f = cfg["finsler"]
    table = norm_table(g, _directions(cfg, win.group), base, ts, S, f["rel_tol"], f["both_signs"])
    sup = [
        {"direction": list(e.components), **sup_equals_limsup_check(e, base, ts, S).to_dict()}
        for e in basis_vectors(win.group)
    ]
    out.mkdir(parents=True, exist_ok=True)
    dim = win.group.dim
    write_rows_csv(
        out / "norm_table.csv", [f"v{k}" for k in range(dim)] + ["value", "diverged"],
        [tuple(e.direction.components) + (e.value, int(e.diverged)) for e in table.estimates],
    )
    report = _report("finsler", cfg, exit_code=EXIT_OK, norm_table=table.to_dict(),
                     symmetry=_symmetry_checks(table), sup_equals_limsup=sup,
                     sigma_sample_size=int(len(S)))
    write_json(out / "finsler.json", report)
    return EXIT_OK, report


def _certificates(cfg):
    group = build_group(cfg)
    gen = cfg["generators"]
    cert = {}
    if gen.get("from_basis") is not None:
        basis = [AlgebraVector(group, tuple(parse_number(c) for c in r)) for r in gen["from_basis"]]
        ok, dim = check_bracket_generating(basis)
        cert["bracket_generating"] = ok
        cert["bracket_closure_dimension"] = dim
        if not ok:
            return None, cert
    try:
        X = build_generators(cfg)
        cert["isotropy_trivial"] = True
    except HausflowError as exc:
        log.info("generator set rejected: %s", exc)
        raw = gen.get("elements") or [[0.0] * group.dim]
        X = GeneratorSet.from_elements(group, [[parse_number(c) for c in r] for r in raw], certify=False)
        cert["isotropy_trivial"] = bool(check_isotropy_trivial(X))
    cert["X"] = X.to_list()
    return X, cert


def cmd_semigroup(cfg, out: Path):
    base = build_base(cfg)
    X, cert = _certificates(cfg)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    if X is not None and len(X) > 1:
        sg = cfg["semigroup"]
        bounds = sg["bounds"] or cfg["window"]["bounds"]
        res = sg["resolution"] or cfg["window"]["resolution"]
        win = WindowSpec(X.group, tuple(tuple(parse_number(c) for c in b) for b in bounds), res, 0.0)
        for L in sg["maxlens"]:
            cloud = generate_words(X, L, win)
            icloud = generate_words(X.inverted(), L, win)
            rows.append((L, len(cloud), covering_radius(cloud, win, base, sg["probe_factor"]),
                         len(icloud), covering_radius(icloud, win, base, sg["probe_factor"])))
    write_rows_csv(out / "semigroup.csv",
                   ["maxlen", "cloud_size", "covering_radius", "inverse_cloud_size", "inverse_covering_radius"],
                   rows)
    write_json(out / "certificate.json", cert)
    report = _report("semigroup", cfg, exit_code=EXIT_OK, certificate=cert, rows=[
        dict(zip(["maxlen", "cloud_size", "covering_radius", "inverse_cloud_size",
                  "inverse_covering_radius"], r)) for r in rows])
    write_json(out / "report.json", report)
    return EXIT_OK, report


def _skip(name, reason):
    return {"name": name, "passed": True, "skipped": True, "detail": reason}


def cmd_verify(cfg, out: Path, field_path=None):
    v = cfg["verify"]
    props = []
    if field_path is not None:
        field_ = load_field(field_path)
        props += [p.to_dict() for p in metric_axioms(field_, v["axiom_tol"])]
    else:
        base, X, win = _setup(cfg)
        state = _flow(cfg, base, X, win, "all")
        limit = state.limit
        grid = limit.grid
        h = grid.step
        converged = state.verdict.kind == "converged"
        props += [p.to_dict() for p in metric_axioms(limit, v["axiom_tol"])]
        props.append(check_monotone(state.iterates, cfg["flow"]["monotone_slack"]).to_dict())
        S, ts, g = _finsler_inputs(cfg, X, win)
        try:
            env = right_invariant_envelope(base, grid, AdjacencySpec(cfg["adjacency"]["stencil_radius"]),
                                           sigma_sample=S, threads=cfg["threads"])
            props.append(check_upper_bound(state.iterates, env, v["upper_bound_steps"] * h).to_dict())
        except EnvelopeInfiniteError as exc:
            props.append(_skip("upper_bound", f"envelope infinite: {exc}"))
        if converged:
            rng = np.random.default_rng(cfg["seed"])
            pairs = random_core_pairs(limit, v["midpoint_pairs"], rng)
            props.append(epsilon_midpoints(limit, pairs, v["midpoint_eps_steps"] * h).to_dict())
            lo, hi = v["sigma_range"]
            sig = grid_translations(grid, lo, hi)
            if all(grid.periodic):
                sig = grid.points
            dfc = right_invariance_defect(limit, sig, v["invariance_rel_tol"])
            ok = dfc.excess <= v["invariance_steps"] * h + dfc.floor
            props.append({"name": "right_invariance", "passed": bool(ok), "value": dfc.excess,
                          "threshold": v["invariance_steps"] * h + dfc.floor, "detail": dfc.to_dict()})
        else:
            for name in ("epsilon_midpoints", "right_invariance", "finsler_bound"):
                props.append(_skip(name, f"flow {state.verdict.kind}"))
        f = cfg["finsler"]
        table = norm_table(g, _directions(cfg, win.group), base, ts, S, f["rel_tol"], f["both_signs"])
        sym = _symmetry_checks(table)
        props.append({"name": "finsler_symmetry", "passed": all(s["ok"] for s in sym),
                      "value": max((s["gap"] for s in sym), default=0.0), "threshold": 1e-3})
        props.append({"name": "finsler_homogeneity", "passed": table.homogeneous,
                      "value": len(table.homogeneity), "threshold": f["rel_tol"]})
        if converged:
            for est in table.estimates:
                if est.diverged:
                    continue
                small = [t for t in ts if t >= h]
                res = check_finsler_bound(limit, est.direction, est.value, small, 2 * h)
                d = res.to_dict()
                d["direction"] = list(est.direction.components)
                props.append(d)
    failed = [p["name"] for p in props if not p["passed"]]
    code = EXIT_VERIFY_FAILED if failed else EXIT_OK
    out.mkdir(parents=True, exist_ok=True)
    report = _report("verify", cfg, exit_code=code, properties=props, failed=failed)
    write_json(out / "verify.json", report)
    return code, report


def cmd_oracle(case: str, out: Path):
    cases = sorted(CASES) if case == "all" else [case]
    paths = [str(write_case(c, out).name) for c in cases]
    return EXIT_OK, {"written": paths}


def _parser():
    p = argparse.ArgumentParser(prog="hausflow", description="Induced Hausdorff metric flows on Lie groups.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML experiment config")
    common.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    common.add_argument("--threads", type=int, help="worker threads for shortest paths")
    common.add_argument("--seed", type=int, help="seed for randomized checks (0 .. 2**64-1)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="iterate the flow and write the limit")
    ver = sub.add_parser("verify", parents=[common], help="run the property suites")
    ver.add_argument("--field", type=Path, help="check a saved field envelope (.json) instead of running")
    sub.add_parser("semigroup", parents=[common], help="word clouds, covering radii, certificates")
    sub.add_parser("finsler", parents=[common], help="norm table and limsup diagnostics")
    ora = sub.add_parser("oracle", parents=[common], help="write brute-force reference values")
    ora.add_argument("case", choices=sorted(CASES) + ["all"])
    return p


def _merge_flags(cfg, args):
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError(["--threads must be >= 1"])
        cfg["threads"] = args.threads
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError(["--seed must fit in an unsigned 64-bit integer"])
        cfg["seed"] = args.seed
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "oracle":
            code, _ = cmd_oracle(args.case, args.out or Path("oracle"))
            return code
        if args.config is None and not (args.command == "verify" and args.field is not None):
            raise ConfigError(["--config is required"])
        if args.config is not None:
            cfg = _merge_flags(load_config(args.config), args)
        else:
            cfg = _merge_flags(load_config_defaults(), args)
        out = args.out or Path(cfg["output"]["dir"])
        if args.command == "run":
            code, rep = cmd_run(cfg, out)
            print(f"{rep['verdict']['kind']} after {rep['verdict']['iterations']} iterations")
        elif args.command == "verify":
            code, rep = cmd_verify(cfg, out, args.field)
            for prop in rep["properties"]:
                status = "skip" if prop.get("skipped") else ("pass" if prop["passed"] else "FAIL")
                print(f"{status:4s} {prop['name']}")
        elif args.command == "semigroup":
            code, _ = cmd_semigroup(cfg, out)
        else:
            code, _ = cmd_finsler(cfg, out)
        return code
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (HausflowError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def load_config_defaults():
    """Effective config for ``verify --field`` runs without a config file."""
    from .config import effective_config

    return effective_config({"group": "R1", "base_metric": {"kind": "euclidean"},
                             "window": {"bounds": [[0, 1]], "resolution": 2}})


if __name__ == "__main__":
    sys.exit(main())
