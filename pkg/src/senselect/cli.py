"""Command line interface.

Subcommands: eval, greedy, exhaustive, verify, gen.  Sensor indices are
1-based on the command line and in files.  Exit codes: 0 on success, 2
for parse errors, 3 for invariant violations, 4 when an enumeration cap
is exceeded, and 5 for property violations.
"""

from __future__ import annotations

import argparse
import sys

from . import fileio, problems, selection, verify
from . import objective

_FMT12 = "#.12g"


def _f12(x: float) -> str:
    return format(float(x), _FMT12)


def _parse_subset(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            out.append(int(tok) - 1)
        except ValueError:
            raise fileio.ProblemFormatError(f"subset: not an integer: {tok!r}") from None
    return tuple(out)


def cmd_eval(args) -> int:
    p = fileio.read_problem(args.problem)
    subset = _parse_subset(args.subset)
    phi = objective.phi_eig(p, subset)
    print(f"phi_eig {_f12(phi)}")
    print(f"eig_nats {_f12(0.5 * phi)}")
    return 0


def _print_selection(report: selection.SelectionReport) -> None:
    if report.per_step:
        print(f"{'step':>4} {'sensor':>6} {'gain':>18} {'phi':>18}")
        for t, (idx, gain, phi) in enumerate(report.per_step, start=1):
            print(f"{t:>4} {idx + 1:>6} {_f12(gain):>18} {_f12(phi):>18}")
    chosen = " ".join(str(i + 1) for i in report.chosen)
    print(f"chosen {chosen if chosen else '(empty)'}")
    print(f"phi_final {_f12(report.phi_final)}")
    print(f"eig_final {_f12(report.eig_final)}")
    cert = report.bound_certificate
    if cert is not None:
        print(
            f"certificate opt_phi={_f12(cert.opt_phi)} "
            f"ratio={_f12(cert.ratio)} floor={_f12(cert.floor)}"
        )


def cmd_greedy(args) -> int:
    p = fileio.read_problem(args.problem)
    run = selection.lazy_greedy if args.lazy else selection.greedy
    report = run(p, args.k, threads=args.threads)
    if args.certify:
        opt = selection.exhaustive(p, args.k, cap=args.cap)
        report = selection.certify_bound(report, opt)
    _print_selection(report)
    if args.out:
        fileio.write_report(report, args.out)
        print(f"report written to {args.out}")
    return 0


def cmd_exhaustive(args) -> int:
    p = fileio.read_problem(args.problem)
    report = selection.exhaustive(p, args.k, cap=args.cap)
    _print_selection(report)
    if args.out:
        fileio.write_report(report, args.out)
        print(f"report written to {args.out}")
    return 0


def cmd_verify(args) -> int:
    p = fileio.read_problem(args.problem)
    summary = verify.verification_run(
        p, trials=args.trials, samples=args.samples, seed=args.seed
    )
    mono, sub, mc = summary.monotone, summary.submodular, summary.mc
    print(
        f"monotone trials={mono.trials} violations={mono.violations} "
        f"min_gain={_f12(mono.min_gain)} max_formula_err={_f12(mono.max_formula_err)}"
    )
    err = "n/a" if sub.max_formula_err is None else _f12(sub.max_formula_err)
    print(
        f"submodular[{sub.mode}] checks={sub.checks} violations={sub.violations} "
        f"max_breach={_f12(sub.max_breach)} max_formula_err={err}"
    )
    print(
        f"mc_eig samples={mc.n_samples} mean={_f12(mc.mean_kl)} "
        f"stderr={_f12(mc.std_error)} target={_f12(summary.mc_target)} "
        f"within_3se={'yes' if summary.mc_ok else 'no'}"
    )
    if args.out:
        fileio.write_report(summary, args.out, problem_hash=p.content_hash())
        print(f"report written to {args.out}")
    if not summary.ok:
        print("FAIL: property violation detected", file=sys.stderr)
        return 5
    print("all checks passed")
    return 0


def cmd_gen(args) -> int:
    nodes = None
    if args.sensor_nodes is not None:
        nodes = tuple(
            int(t) for t in args.sensor_nodes.split(",") if t.strip()
        )
    spec = problems.ProblemSpec(
        kind=args.kind,
        n=args.n,
        n_s=args.n_s,
        seed=args.seed,
        conditioning=args.conditioning,
        diffusivity=args.diffusivity,
        element_size=args.element_size,
        prior_weight=args.prior_weight,
        sensor_nodes=nodes,
    )
    p = problems.generate(spec)
    fileio.write_problem(p, args.out)
    print(f"wrote {args.out} (kind={spec.kind} n={p.n} n_s={p.n_s} seed={spec.seed})")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="senselect",
        description="Greedy sensor selection maximizing expected information gain.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("eval", help="evaluate the objective on a fixed subset")
    pe.add_argument("problem", help="problem file")
    pe.add_argument("subset", help="comma-separated 1-based sensor indices, '' for empty")
    pe.set_defaults(func=cmd_eval)

    pg = sub.add_parser("greedy", help="greedy selection of k sensors")
    pg.add_argument("problem")
    pg.add_argument("k", type=int)
    pg.add_argument("--lazy", action="store_true", help="lazy evaluation (same output)")
    pg.add_argument("--certify", action="store_true",
                    help="attach the (1 - 1/e) certificate via exhaustive search")
    pg.add_argument("--out", help="write a report file")
    pg.add_argument("--threads", type=int, default=1,
                    help="parallel gain evaluations per step")
    pg.add_argument("--cap", type=int, default=selection.EXHAUSTIVE_CAP,
                    help="subset cap for --certify")
    pg.set_defaults(func=cmd_greedy)

    px = sub.add_parser("exhaustive", help="exact optimum over all size-k subsets")
    px.add_argument("problem")
    px.add_argument("k", type=int)
    px.add_argument("--cap", type=int, default=selection.EXHAUSTIVE_CAP)
    px.add_argument("--out", help="write a report file")
    px.set_defaults(func=cmd_exhaustive)

    pv = sub.add_parser("verify", help="run the property and Monte Carlo checks")
    pv.add_argument("problem")
    pv.add_argument("--trials", type=int, default=200)
    pv.add_argument("--samples", type=int, default=2000)
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--out", help="write a report file")
    pv.set_defaults(func=cmd_verify)

    pn = sub.add_parser("gen", help="generate a problem file")
    pn.add_argument("--kind", choices=("random", "chain"), required=True)
    pn.add_argument("--n", type=int, required=True)
    pn.add_argument("--n-s", dest="n_s", type=int, required=True)
    pn.add_argument("--seed", type=int, default=0)
    pn.add_argument("--conditioning", type=float, default=50.0)
    pn.add_argument("--diffusivity", type=float, default=1.0)
    pn.add_argument("--element-size", dest="element_size", type=float, default=None)
    pn.add_argument("--prior-weight", dest="prior_weight", type=float, default=0.1)
    pn.add_argument("--sensor-nodes", dest="sensor_nodes", default=None,
                    help="comma-separated interior nodes for chain problems")
    pn.add_argument("--out", required=True)
    pn.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except fileio.ProblemFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except selection.CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except selection.BoundViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # includes numpy.linalg.LinAlgError; these are model invariant breaches
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
