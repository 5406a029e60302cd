"""Command-line front end.

Subcommands
-----------
eval          single-scenario Bell observable, JSON on stdout
figure1       CSV of maximal violations vs mode count (optimized and plain)
figure2       CSV of critical efficiency / purity curves per inequality
oracle-check  closed-form vs Fock-space agreement report (nonzero exit on breach)
optimize      free-function optimization, CSV of node values + JSON summary

All file outputs are deterministic: floats at 12 significant digits, LF line
endings, plus a ``<out>.meta.json`` sidecar echoing the configuration and the
quadrature order.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from ._accel import backend_name
from .critical import critical_efficiency, critical_purity
from .errors import ConvergenceError
from .functional_bell import (
    bell_value,
    cfrd_bell_value,
    closed_form_sides,
    solve_epsilon_even,
    solve_epsilon_odd,
)
from .mk_binning import mk_bell_value, mk_evaluate, mk_optimal_angles
from .model import Identity, Optimal, SignBin, StateSpec, density_matrix
from .oracle import evaluate, optimize_epsilon_numeric, orthogonal_angles
from .quadrature import DEFAULT_ORDER, QUICK_ORDER, gauss_hermite_rule, kernel_integrals
from .variational import fit_optimal_epsilon, optimize_function

ORACLE_CHECK_TOL = 1e-6
MK_RSWEEP_TOL = 1e-8


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_sidecar(path: Path, command: str, config: dict) -> None:
    meta = {
        "command": command,
        "config": {k: v for k, v in config.items()
                   if k != "func" and not callable(v)},
        "package_version": __version__,
        "contraction_backend": backend_name(),
    }
    side = path.with_name(path.name + ".meta.json")
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _canonical_r(n: int) -> int:
    return n // 2


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _cmd_eval(args) -> int:
    rule = gauss_hermite_rule(args.order)
    r = args.r if args.r is not None else _canonical_r(args.n)
    spec = StateSpec(n_modes=args.n, r_split=r, purity=args.p, efficiency=args.eta)
    payload = {
        "inequality": args.ineq,
        "n": args.n,
        "r": r,
        "eta": args.eta,
        "p": args.p,
        "order": args.order,
    }
    if args.ineq == "functional":
        if r == _canonical_r(args.n):
            res = bell_value(spec, rule)
        else:
            _, res = optimize_epsilon_numeric(spec, rule)
        payload.update(
            function=res.function_id, lhs=res.lhs, rhs=res.rhs, ratio=res.ratio
        )
    elif args.ineq == "cfrd":
        res = cfrd_bell_value(spec, rule)
        payload.update(
            function=res.function_id, lhs=res.lhs, rhs=res.rhs, ratio=res.ratio
        )
    else:
        b = mk_bell_value(spec)
        payload.update(function="sign_bin", s_value=b, bound=1.0, ratio=b)
    payload["violated"] = bool(payload["ratio"] > 1.0)

    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        if args.format == "json":
            out.write_text(text + "\n", encoding="utf-8")
        else:
            keys = sorted(payload)
            _write_csv(out, keys, [tuple(payload[k] for k in keys)])
        _write_sidecar(out, "eval", vars(args) | {"r": r})
    return 0


# ---------------------------------------------------------------------------
# figure1
# ---------------------------------------------------------------------------

def _cmd_figure1(args) -> int:
    if args.n_min < 2 or args.n_max < args.n_min:
        raise ValueError(f"invalid mode-count range [{args.n_min}, {args.n_max}]")
    rule = gauss_hermite_rule(args.order)
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        spec = StateSpec(n_modes=n, r_split=_canonical_r(n))
        b_opt = bell_value(spec, rule).ratio
        b_cfrd = cfrd_bell_value(spec, rule).ratio
        rows.append((n, b_opt, b_cfrd))
    out = Path(args.out)
    _write_csv(out, ["N", "B_optimal", "B_cfrd"], rows)
    _write_sidecar(out, "figure1", vars(args))
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------------------
# figure2
# ---------------------------------------------------------------------------

def _cmd_figure2(args) -> int:
    if args.n_min < 2 or args.n_max < args.n_min:
        raise ValueError(f"invalid mode-count range [{args.n_min}, {args.n_max}]")
    rule = gauss_hermite_rule(args.order)
    inequalities = ("functional", "cfrd", "mk") if args.ineq == "all" else (args.ineq,)
    rows = []
    for ineq in inequalities:
        for n in range(args.n_min, args.n_max + 1):
            eta_c = critical_efficiency(n, 1.0, ineq, rule)
            p_c = critical_purity(n, 1.0, ineq, rule)
            missing = []
            if eta_c is None:
                missing.append("eta")
            if p_c is None:
                missing.append("p")
            rows.append((
                ineq,
                n,
                "" if eta_c is None else eta_c,
                "" if p_c is None else p_c,
                "+".join(missing) if missing else "",
            ))
    out = Path(args.out)
    _write_csv(out, ["inequality", "N", "eta_crit", "p_crit", "no_violation"], rows)
    _write_sidecar(out, "figure2", vars(args))
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------------------
# oracle-check
# ---------------------------------------------------------------------------

def _oracle_check_cells(n_min, n_max, perturb_eps, rule):
    """Yield (label, closed, oracle, rel_deviation) per grid cell."""
    etas = (1.0, 0.9, 0.8)
    ps = (1.0, 0.9)
    for n in range(n_min, n_max + 1):
        r = _canonical_r(n)
        for eta in etas:
            for p in ps:
                spec = StateSpec(n_modes=n, r_split=r, purity=p, efficiency=eta)
                rho = density_matrix(spec)
                angles = orthogonal_angles(n, r)

                if n % 2 == 0:
                    eps_opt = solve_epsilon_even(eta, rule).epsilon_lossy
                else:
                    eps_opt = solve_epsilon_odd(n, eta, rule).epsilon_odd
                ki = kernel_integrals(Optimal(eps_opt + perturb_eps), rule)
                lhs, rhs = closed_form_sides(n, r, eta, p, ki)
                closed = lhs / rhs
                f = Optimal(eps_opt)
                orc = evaluate(rho, f, f, angles, rule).ratio
                yield (f"functional n={n} eta={eta} p={p}", closed, orc)

                closed_c = cfrd_bell_value(spec, rule).ratio
                ident = Identity()
                orc_c = evaluate(rho, ident, ident, angles, rule).ratio
                yield (f"cfrd n={n} eta={eta} p={p}", closed_c, orc_c)

                closed_m = mk_bell_value(spec)
                orc_m = mk_evaluate(rho, mk_optimal_angles(n, r)).s_value
                yield (f"mk n={n} eta={eta} p={p}", closed_m, orc_m)


def _cmd_oracle_check(args) -> int:
    if not 3 <= args.n_min <= args.n_max <= 8:
        raise ValueError("oracle-check grid is limited to 3 <= n <= 8")
    rule = gauss_hermite_rule(args.order)
    lines = []
    worst = 0.0
    worst_label = ""
    for label, closed, orc in _oracle_check_cells(
        args.n_min, args.n_max, args.perturb_eps, rule
    ):
        rel = abs(closed - orc) / abs(orc)
        if rel > worst:
            worst, worst_label = rel, label
        lines.append(f"{label}: closed={closed:.12g} oracle={orc:.12g} rel={rel:.3e}")

    # split-independence of the binned value, exercised across every r
    spec3 = [StateSpec(n_modes=3, r_split=r) for r in (1, 2, 3)]
    svals = [
        mk_evaluate(density_matrix(s), mk_optimal_angles(3, s.r_split)).s_value
        for s in spec3
    ]
    spread = max(svals) - min(svals)
    lines.append(f"mk r-sweep n=3: values={[f'{v:.12g}' for v in svals]} spread={spread:.3e}")

    ok = worst <= ORACLE_CHECK_TOL and spread <= MK_RSWEEP_TOL
    lines.append(f"max relative deviation: {worst:.3e} ({worst_label})")
    lines.append("status: " + ("OK" if ok else f"BREACH (tolerance {ORACLE_CHECK_TOL:g})"))
    report = "\n".join(lines)
    print(report)
    if args.out:
        Path(args.out).write_text(report + "\n", encoding="utf-8")
        _write_sidecar(Path(args.out), "oracle-check", vars(args))
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

def _cmd_optimize(args) -> int:
    if args.n > 10:
        raise ValueError("free-function optimization is limited to 10 modes")
    rule = gauss_hermite_rule(args.order)
    r = args.r if args.r is not None else _canonical_r(args.n)
    spec = StateSpec(n_modes=args.n, r_split=r, purity=args.p, efficiency=args.eta)
    init = SignBin() if args.init == "signbin" else Identity()

    status = 0
    try:
        best, bell = optimize_function(spec, rule, init)
    except ConvergenceError as exc:
        best, bell = exc.best
        status = 1
        print(f"warning: {exc}", file=sys.stderr)

    eps_fit, scale, rel_err = fit_optimal_epsilon(best, rule)
    if args.n % 2 == 0:
        eps_ref = solve_epsilon_even(args.eta, rule).epsilon_lossy
    else:
        eps_ref = solve_epsilon_odd(args.n, args.eta, rule).epsilon_odd

    out = Path(args.out)
    _write_csv(out, ["node", "f_value"], best.to_csv_rows())
    summary = {
        "n": args.n,
        "r": r,
        "eta": args.eta,
        "p": args.p,
        "order": args.order,
        "ratio": bell.ratio,
        "fitted_epsilon": eps_fit,
        "fitted_scale": scale,
        "fit_relative_l2_error": rel_err,
        "reference_epsilon": eps_ref,
        "epsilon_deviation": abs(eps_fit - eps_ref),
        "converged": status == 0,
    }
    side = out.with_name(out.name + ".summary.json")
    side.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_sidecar(out, "optimize", vars(args) | {"r": r})
    print(json.dumps(summary, indent=2, sort_keys=True))
    return status


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvbell",
        description="Multipartite continuous-variable Bell observables and thresholds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_order(p, default=DEFAULT_ORDER):
        p.add_argument("--order", type=int, default=default,
                       help=f"quadrature order (default {default})")

    p_eval = sub.add_parser("eval", help="evaluate one scenario")
    p_eval.add_argument("--ineq", choices=("functional", "cfrd", "mk"), required=True)
    p_eval.add_argument("--n", type=int, required=True)
    p_eval.add_argument("--r", type=int, default=None)
    p_eval.add_argument("--eta", type=float, default=1.0)
    p_eval.add_argument("--p", type=float, default=1.0)
    p_eval.add_argument("--format", choices=("csv", "json"), default="json")
    p_eval.add_argument("--out", default=None)
    add_order(p_eval)
    p_eval.set_defaults(func=_cmd_eval)

    p_f1 = sub.add_parser("figure1", help="violation growth with mode count")
    p_f1.add_argument("--n-min", type=int, default=4)
    p_f1.add_argument("--n-max", type=int, default=20)
    p_f1.add_argument("--out", default="figure1.csv")
    add_order(p_f1)
    p_f1.set_defaults(func=_cmd_figure1)

    p_f2 = sub.add_parser("figure2", help="critical efficiency and purity curves")
    p_f2.add_argument("--n-min", type=int, default=3)
    p_f2.add_argument("--n-max", type=int, default=20)
    p_f2.add_argument("--ineq", choices=("all", "functional", "cfrd", "mk"), default="all")
    p_f2.add_argument("--out", default="figure2.csv")
    add_order(p_f2)
    p_f2.set_defaults(func=_cmd_figure2)

    p_oc = sub.add_parser("oracle-check", help="closed-form vs Fock-space report")
    p_oc.add_argument("--n-min", type=int, default=3)
    p_oc.add_argument("--n-max", type=int, default=6)
    p_oc.add_argument("--perturb-eps", type=float, default=0.0,
                      help="shift the closed form's function parameter (sensitivity test)")
    p_oc.add_argument("--out", default=None)
    add_order(p_oc)
    p_oc.set_defaults(func=_cmd_oracle_check)

    p_opt = sub.add_parser("optimize", help="free-function optimization")
    p_opt.add_argument("--n", type=int, default=6)
    p_opt.add_argument("--r", type=int, default=None)
    p_opt.add_argument("--eta", type=float, default=1.0)
    p_opt.add_argument("--p", type=float, default=1.0)
    p_opt.add_argument("--init", choices=("identity", "signbin"), default="identity")
    p_opt.add_argument("--out", default="optimize.csv")
    add_order(p_opt, default=QUICK_ORDER)
    p_opt.set_defaults(func=_cmd_optimize)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        parser.exit(2, f"{parser.prog}: error: {exc}\n")
    except Exception as exc:  # computation failure
        print(f"{parser.prog}: computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
