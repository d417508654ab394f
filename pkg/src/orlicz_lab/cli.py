"""Command-line front end: ``orlicz-lab <command> [--config PATH] [--out DIR] ...``.

Exit codes: 0 success, 1 a check failed, 2 usage or precondition error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, _domain
from .errors import InvalidSpecError, PreconditionError, RangeError, UnsupportedSpecError
from .grid import GAUGE_CHECK, GAUGE_RTOL
from .io import write_density_csv, write_grid_csv, write_json, write_table_csv
from .nfunc import (check_growth, essentially_stronger, estimate_indices, index_ratio,
                    mstar_index_report, sobolev_table)
from .operator import SUPPORT_FLOOR, KernelQuadrature, consistency_check
from .sobolev import FractionalParams, empirical_c5, wholespace_embedding_probe
from . import suite
from .variational import checks, fountain, search
from .variational.ladder import sine_ladder

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

TOLERANCES = {
    "inequality_slack": suite.SLACK,
    "gauge_rtol": GAUGE_RTOL,
    "gauge_check": GAUGE_CHECK,
    "residual_tol": search.RESIDUAL_TOL,
    "min_separation": search.MIN_SEPARATION,
    "deflation_beta": search.BETA,
    "lk_monotone_slack": fountain.MONOTONE_SLACK,
    "support_floor": SUPPORT_FLOOR,
    "operator_rel_error": 1e-2,
    "embed_stability_factor": 2.0,
}


class UsageError(ValueError):
    pass


def _header(cmd: str, cfg: RunConfig, seed: int) -> dict:
    return {"command": cmd, "version": __version__, "config": cfg.raw,
            "config_sha256": cfg.sha256, "seed": seed, "tolerances": TOLERANCES}


# ---------------------------------------------------------------------------
# nfun


def cmd_nfun(cfg: RunConfig, out: Path, seed: int) -> int:
    spec = cfg.nfun()
    d, s, mu = cfg.d, float(cfg["s"]), float(cfg["mu"])
    idx = estimate_indices(spec, d)
    growth = check_growth(spec, mu, d, s)

    t = spec.scan_grid(257)
    write_density_csv(out / "nfun_density.csv", t, spec.m(t))
    write_table_csv(out / "nfun_scan.csv",
                    [{"t": float(a), "M": float(b), "index_ratio": float(c)}
                     for a, b, c in zip(t, spec.M(t), index_ratio(spec, t))])

    if growth.M3:
        try:
            tab = sobolev_table(spec, d, s)
            lo, hi = tab.t_range
            ts = np.logspace(np.log10(lo), np.log10(hi), 129)
            write_table_csv(out / "mstar_table.csv",
                            [{"t": float(a), "Mstar": float(b)} for a, b in zip(ts, tab.value(ts))])
            sob = {"status": "ok", "t_range": [lo, hi], "table": "mstar_table.csv"}
        except (UnsupportedSpecError, RangeError) as exc:
            sob = {"status": "unsupported", "reason": str(exc)}
    else:
        sob = {"status": "unsupported", "reason": "(M3) fails for this spec, d and s"}

    domination = []
    for other in cfg["compare"]:
        b = cfg.nfun(other)
        v = essentially_stronger(b, spec)
        domination.append({"weaker": b.label(), "stronger": spec.label(),
                           "verdict": v["verdict"]})

    report = _header("nfun", cfg, seed)
    report.update(spec=spec.to_dict(), label=spec.label(), indices=idx.to_dict(),
                  growth=growth.to_dict(), sobolev_conjugate=sob,
                  mstar_indices=mstar_index_report(spec, d, s), domination=domination,
                  tables=["nfun_density.csv", "nfun_scan.csv"])
    write_json(out / "nfun_report.json", report)
    print(f"nfun {spec.label()}: m0={idx.m0:.6g} m^0={idx.m_sup:.6g} "
          f"verdicts={growth.verdicts} sobolev={sob['status']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def verify_rows(cfg: RunConfig, seed: int) -> list:
    count = int(cfg["functions"])
    if count < 1:
        raise UsageError("verify needs a nonempty function set (functions >= 1)")
    ps = cfg.problem()
    M, fp = ps.nfun, ps.fp
    us = suite.random_functions(ps.domain, count, seed)
    vs = suite.random_functions(ps.domain, count, seed + 1)
    rows = suite.growth_rows(M, ps.mu, fp.d, fp.s) + suite.space_suite(M, fp, us, vs)

    sandwiches = [checks.energy_sandwich_check(ps, u)["rows"] for u in us]
    sl = [min(r["value"] - r["lower"], r["upper"] - r["value"]) + checks.SLACK * max(1, r["value"])
          for rr in sandwiches for r in rr.values()]
    rows.append(suite._row("energy_sandwich", sl, len(us)))

    conv = [checks.convexity_inequality_check(ps, u, v) for u, v in zip(us, vs)]
    if conv[0]["skipped"]:
        rows.append(suite.skipped("uniform_convexity", conv[0]["notice"]))
    else:
        rows.append(suite._row("uniform_convexity",
                               [c["slack"] + checks.SLACK * max(1.0, abs(c["rhs"])) for c in conv]))
    return rows


def cmd_verify(cfg: RunConfig, out: Path, seed: int) -> int:
    rows = verify_rows(cfg, seed)
    failing = [r["name"] for r in rows if r["pass"] is False]
    report = _header("verify", cfg, seed)
    report.update(checks=rows, failing=failing, all_pass=not failing)
    write_json(out / "verify_report.json", report)
    write_table_csv(out / "verify_checks.csv",
                    [{k: r.get(k) for k in ("name", "pass", "worst_slack", "count")} for r in rows])
    for r in rows:
        state = "skip" if r["pass"] is None else ("pass" if r["pass"] else "FAIL")
        print(f"{state:4s} {r['name']}")
    if failing:
        print("failing: " + ", ".join(failing), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# embed


def cmd_embed(cfg: RunConfig, out: Path, seed: int) -> int:
    opts = cfg["embed"]
    M = cfg.nfun(opts["nfun"])
    s = float(opts["s"])
    fp = FractionalParams(s, cfg.d)
    base = _domain(cfg.d, opts["domain"])
    rows = [empirical_c5(M, fp, base.refined(int(n)), int(opts["count"]), seed)
            for n in opts["grids"]]
    c5 = [r["C5"] for r in rows]
    factor = max(c5) / min(c5)
    probe = wholespace_embedding_probe(M, fp, tuple(float(h) for h in opts["half_widths"]))
    stable = bool(factor < TOLERANCES["embed_stability_factor"])
    report = _header("embed", cfg, seed)
    report.update(spec=M.label(), s=s, d=cfg.d, grids=rows, refinement_factor=factor,
                  stable=stable, wholespace=probe)
    report["pass"] = stable
    write_json(out / "embed_report.json", report)
    write_table_csv(out / "embed_grids.csv", rows)
    print(f"embed {M.label()} s={s}: C5={['%.4g' % c for c in c5]} factor={factor:.3f}")
    return EXIT_OK if stable else EXIT_FAIL


# ---------------------------------------------------------------------------
# operator


def cmd_operator(cfg: RunConfig, out: Path, seed: int) -> int:
    opts = cfg["operator"]
    M = cfg.nfun(opts["nfun"])
    fp = FractionalParams(float(opts["s"]), cfg.d)
    dom = cfg.operator_domain()
    rows = []
    for n in sorted({max(8, dom.n // 2), dom.n}):
        grid = dom.refined(n)
        u = cfg.expression(opts["u"], grid)
        v = cfg.expression(opts["v"], grid)
        rows.append(consistency_check(u, v, M, fp, KernelQuadrature(grid)))
    final = rows[-1]
    ok = final["rel_error"] <= TOLERANCES["operator_rel_error"]
    non_increasing = all(b["rel_error"] <= a["rel_error"] + 1e-12 for a, b in zip(rows, rows[1:]))
    report = _header("operator", cfg, seed)
    report.update(spec=M.label(), s=fp.s, rows=rows, non_increasing=non_increasing)
    report["pass"] = ok
    write_json(out / "operator_report.json", report)
    write_table_csv(out / "operator_rows.csv", rows)
    print(f"operator n={final['n']}: rel_error={final['rel_error']:.3e}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# solve


def cmd_solve(cfg: RunConfig, out: Path, seed: int) -> int:
    ps = cfg.problem()
    target = int(cfg["count_target"])
    res = search.find_critical_points(ps, count_target=target, seeds=int(cfg["seeds"]), seed=seed)
    sols = res["solutions"]
    C = checks.embedding_constant(ps, seed=seed)
    rows = []
    for i, sol in enumerate(sols, 1):
        name = f"solution_{i}.csv"
        write_grid_csv(out / name, sol.u)
        rows.append({**sol.to_dict(), "file": name,
                     "norm_bound": checks.norm_bound_check(ps, sol.u, C),
                     "energy_sandwich": checks.energy_sandwich_check(ps, sol.u)["pass"],
                     "derivative_bound": checks.derivative_bound_check(ps, sol.u, C, seed=seed)})
    try:
        tails = checks.compactness_probe(ps, "tails", sols, seed=seed)
    except PreconditionError as exc:
        tails = {"skipped": True, "reason": str(exc)}
    ok = (len(sols) >= target and res.get("all_negative", False)
          and res.get("sorted_nondecreasing", False)
          and all(r["norm_bound"]["pass"] for r in rows))
    report = _header("solve", cfg, seed)
    report.update(problem=ps.to_dict(), structural=res["checks"], C=C, solutions=rows,
                  energies=res.get("energies", []), all_negative=res.get("all_negative"),
                  sorted_nondecreasing=res.get("sorted_nondecreasing"),
                  attempts=res["attempts"], tails=tails, note=res.get("note", ""))
    report["pass"] = ok
    write_json(out / "solve_summary.json", report)
    print(f"solve: {len(sols)} pairs, energies={['%.4g' % e for e in res.get('energies', [])]}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# fountain


def cmd_fountain(cfg: RunConfig, out: Path, seed: int) -> int:
    ps = cfg.problem()
    k_max = int(cfg["k_max"])
    ks_diag = [int(k) for k in cfg["fountain_k"]]
    ladder = sine_ladder(ps.domain, max(24, k_max + 1, max(ks_diag, default=1) + 1))
    table = fountain.lk_table(ps, ladder, range(1, k_max + 1), seed=seed)
    diags = []
    for k in ks_diag:
        lk = table["l"][k - 1] if k <= k_max else None
        diags.append(fountain.fountain_diagnostics(ps, ladder, k, float(cfg["theta"]),
                                                   lk=lk, seed=seed))
    ok = (table["non_increasing"] and all(g["signs_ok"] and g["d_k_in_range"] for g in diags))
    report = _header("fountain", cfg, seed)
    report.update(problem=ps.to_dict(), lk=table, diagnostics=diags)
    report["pass"] = ok
    write_json(out / "fountain_report.json", report)
    write_table_csv(out / "lk_table.csv", [{"k": k, "l_k": v} for k, v in zip(table["k"], table["l"])])
    print(f"fountain: l_k={['%.3g' % v for v in table['l']]} "
          f"non_increasing={table['non_increasing']}")
    return EXIT_OK if ok else EXIT_FAIL


HELP = {
    "nfun": "indices, growth conditions, Sobolev conjugate and domination of one N-function",
    "verify": "run the inequality suite on random grid functions",
    "embed": "empirical embedding constants under refinement and on growing boxes",
    "operator": "pointwise operator against the weak form",
    "solve": "deflated search for several critical pairs",
    "fountain": "l_k table and sampled a_k, b_k, d_k",
}

COMMANDS = {"nfun": cmd_nfun, "verify": cmd_verify, "embed": cmd_embed,
            "operator": cmd_operator, "solve": cmd_solve, "fountain": cmd_fountain}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orlicz-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--config", type=Path, help="JSON run configuration")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--grid-n", type=int, dest="grid_n", help="override points per axis")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = None
        if args.grid_n is not None:
            overrides = {"domain": {"n": args.grid_n}, "operator": {"domain": {"n": args.grid_n}}}
        cfg = RunConfig.load(args.config, overrides)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out, args.seed)
    except (UsageError, InvalidSpecError, PreconditionError, UnsupportedSpecError, ValueError) as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
