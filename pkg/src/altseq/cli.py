"""Command-line interface: ``altseq exact | simulate | verify``.

Exit codes: 0 success, 1 usage error, 2 input-file error, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import time
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path

from .exact import (
    Distribution,
    exact_mean_iid,
    gamma2_iid,
    gamma2_series,
    gamma2_uniform_closed,
    mixing_bound,
    osc,
    osc_bounds,
    perm_moments,
)
from .markov import (
    MarkovModel,
    NotErgodicError,
    augment_pair,
    augment_triple_stationary,
    osc_plus_minus,
)
from .montecarlo import GENERATOR, SimConfig, run
from .report import dumps, make_report

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2, 3
MIXING_TABLE_ROWS = 32
ROW_SUM_TOL = Fraction(1, 10**12)


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# input files

def parse_number(value, where: str) -> Fraction:
    """Exact value of a JSON number or a ``"num/den"`` / decimal string."""
    if isinstance(value, bool) or not isinstance(value, (int, Decimal, str)):
        raise InputError(f"{where}: expected a number or 'num/den' string, got {value!r}")
    try:
        out = Fraction(value)
    except (ValueError, ZeroDivisionError, InvalidOperation) as exc:
        raise InputError(f"{where}: cannot parse {value!r} ({exc})") from None
    if out < 0:
        raise InputError(f"{where}: negative probability {value!r}")
    return out


def _load_json(path: str, files: dict) -> object:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    files[path] = raw
    try:
        return json.loads(raw.decode("utf-8"), parse_float=Decimal)
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not UTF-8 text ({exc.reason})") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _field(doc, key: str, path: str):
    if not isinstance(doc, dict) or key not in doc:
        raise InputError(f"{path}: missing field '{key}'")
    return doc[key]


def load_distribution(dist_arg: str, files: dict) -> Distribution:
    """``uniform:q`` or a JSON file ``{"p": [...]}``."""
    if dist_arg.startswith("uniform:"):
        try:
            q = int(dist_arg.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad --dist shorthand {dist_arg!r}, expected uniform:q") from None
        if q < 1:
            raise UsageError("uniform:q needs q >= 1")
        return Distribution.uniform(q)
    doc = _load_json(dist_arg, files)
    probs = _field(doc, "p", dist_arg)
    if not isinstance(probs, list) or not probs:
        raise InputError(f"{dist_arg}: field 'p' must be a non-empty list")
    values = tuple(parse_number(v, f"{dist_arg}: field p[{i}]") for i, v in enumerate(probs))
    total = sum(values)
    if total != 1:
        raise InputError(f"{dist_arg}: field 'p' sums to {total}, not 1")
    return Distribution(values)


def load_matrix(path: str, files: dict) -> MarkovModel:
    """JSON file ``{"P": [[...], ...]}`` holding a row-stochastic matrix."""
    doc = _load_json(path, files)
    rows = _field(doc, "P", path)
    if not isinstance(rows, list) or not rows:
        raise InputError(f"{path}: field 'P' must be a non-empty list of rows")
    q = len(rows)
    matrix = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != q:
            raise InputError(f"{path}: field P[{i}] must be a list of {q} numbers")
        vals = [parse_number(v, f"{path}: field P[{i}][{j}]") for j, v in enumerate(row)]
        total = sum(vals)
        if abs(total - 1) > ROW_SUM_TOL:
            raise InputError(f"{path}: row {i} sums to {float(total)!r}, not 1")
        matrix.append([float(v) for v in vals])
    model = MarkovModel(matrix)
    if not model.ergodic:
        raise InputError(f"{path}: chain is not ergodic (irreducible and aperiodic)")
    return model


# --------------------------------------------------------------------------
# commands

def cmd_exact(args, files: dict) -> dict:
    if args.target == "perm":
        law = perm_moments(args.n)
        return {
            "inputs": {"n": args.n},
            "results": {"mean": law.mean, "variance": law.variance},
            "sources": {"mean": "closed_form", "variance": law.source},
        }
    if args.target == "word":
        mu = load_distribution(args.dist, files)
        lower, upper = osc_bounds(mu)
        results = {
            "osc": osc(mu),
            "osc_bounds": {"lower": lower, "upper": upper},
            "mean": exact_mean_iid(mu, args.n),
            "gamma2_iid": gamma2_iid(mu),
            "gamma2_series": gamma2_series(mu),
        }
        if len(set(mu.probs)) == 1:
            results["gamma2_uniform_closed"] = gamma2_uniform_closed(mu.q)
        results["mixing_bound_table"] = [
            {"n": k, "bound": mixing_bound(k, mu)} for k in range(1, min(args.n, MIXING_TABLE_ROWS) + 1)
        ]
        return {
            "inputs": {"n": args.n, "p": list(mu.probs)},
            "results": results,
            "sources": {k: "closed_form" for k in results},
        }
    model = load_matrix(args.matrix, files)
    try:
        _, pair = augment_pair(model)
        triple = augment_triple_stationary(model)
        plus, minus = osc_plus_minus(model)
    except NotErgodicError as exc:
        raise InputError(f"{args.matrix}: {exc}") from None
    results = {
        "pi": model.pi.tolist(),
        "pair_stationary": [
            {"letter": r + 1, "gradient": g, "mass": float(pair[2 * r + (0 if g == 1 else 1)])}
            for r in range(model.q) for g in (1, -1)
        ],
        "triple_stationary": [
            {"letter": r, "previous": a, "gradient": b, "mass": m} for (r, a, b), m in sorted(triple.items())
        ],
        "osc_plus": plus,
        "osc_minus": minus,
        "osc": plus + minus,
    }
    return {
        "inputs": {"P": model.P.tolist()},
        "results": results,
        "sources": {k: "closed_form" for k in results},
    }


def _sim_config(args, files: dict) -> SimConfig:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    dist = chain = None
    if args.model == "word":
        if not args.dist:
            raise UsageError("--model word requires --dist")
        dist = load_distribution(args.dist, files)
    elif args.model == "markov":
        if not args.matrix:
            raise UsageError("--model markov requires --matrix")
        chain = load_matrix(args.matrix, files)
    config = SimConfig(model=args.model, n=args.n, trials=args.trials, seed=args.seed, dist=dist,
                       chain=chain, sampler=args.sampler, histogram_bin=args.bin,
                       keep_samples=args.keep_samples or args.out == "csv")
    try:
        config.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return config


def cmd_simulate(args, files: dict) -> dict:
    config = _sim_config(args, files)
    stats = run(config, threads=args.threads)
    results = stats.to_dict()
    center_source = results.pop("center_source")
    scale_source = results.pop("scale_source")
    sources = {k: "simulation" for k in results}
    sources["center"] = center_source
    sources["scale"] = scale_source
    inputs = {"model": args.model, "n": args.n, "trials": args.trials}
    if config.dist is not None:
        inputs["p"] = list(config.dist.probs)
    if config.chain is not None:
        inputs["P"] = config.chain.P.tolist()
    generator = dict(GENERATOR, sampler=stats.metadata["sampler"], master_seed=args.seed)
    return {
        "inputs": inputs,
        "results": results,
        "sources": sources,
        "generator": generator,
        "calibration_note": "statistical tolerances are empirical calibrations, not proven rates",
        "_samples": stats.samples,
    }


def cmd_verify(args, files: dict) -> dict:
    from .verify import format_table, run_suite

    rows = run_suite(args.suite, fast=args.fast, only=args.only)
    return {
        "inputs": {"suite": args.suite, "fast": args.fast},
        "results": {},
        "sources": {},
        "checks": [r.to_dict() for r in rows],
        "_table": format_table(rows),
        "_failed": sum(r.verdict == "fail" for r in rows),
    }


# --------------------------------------------------------------------------
# argument parsing and dispatch

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="altseq", description="Longest alternating subsequence statistics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--out-file", help="write output here instead of stdout")
        p.add_argument("--timing", action="store_true", help="add wall-clock time to the report")

    ex = sub.add_parser("exact", help="closed-form statistics")
    ex_sub = ex.add_subparsers(dest="target", required=True, parser_class=_Parser)
    p = ex_sub.add_parser("perm", help="uniform random permutations")
    p.add_argument("--n", type=int, required=True)
    common(p)
    p = ex_sub.add_parser("word", help="iid words over 1..q")
    p.add_argument("--dist", required=True, help="uniform:q or a JSON file {\"p\": [...]}")
    p.add_argument("--n", type=int, required=True)
    common(p)
    p = ex_sub.add_parser("markov", help="ergodic Markov words")
    p.add_argument("--matrix", required=True, help="JSON file {\"P\": [[...], ...]}")
    common(p)

    sim = sub.add_parser("simulate", help="seeded Monte Carlo")
    sim.add_argument("--model", choices=("perm", "word", "markov"), required=True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--trials", type=int, required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--dist")
    sim.add_argument("--matrix")
    sim.add_argument("--sampler", choices=("rank", "shuffle"), default="rank")
    sim.add_argument("--out", choices=("json", "csv"), default="json")
    sim.add_argument("--keep-samples", action="store_true")
    sim.add_argument("--bin", type=int, default=1, help="histogram bin width")
    sim.add_argument("--threads", type=int, help="worker threads (capped by ALTSEQ_THREADS)")
    common(sim)

    ver = sub.add_parser("verify", help="run verification suites")
    ver.add_argument("--suite", choices=("permutation", "iid", "markov", "all"), default="all")
    ver.add_argument("--fast", action="store_true", help="skip enumerations beyond n = 8")
    ver.add_argument("--only", nargs="+", metavar="CHECK", help="run only these named checks")
    common(ver)
    return parser


def _echo(argv: list[str]) -> list[str]:
    """Argument vector without ``--threads``, which must not change any output."""
    out, skip = [], False
    for arg in argv:
        if skip:
            skip = False
        elif arg == "--threads":
            skip = True
        elif not arg.startswith("--threads="):
            out.append(arg)
    return out


def _emit(text: str, out_file: str | None, stdout) -> None:
    if out_file:
        Path(out_file).write_text(text)
    else:
        stdout.write(text)


def main(argv=None, stdout=None, stderr=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    files: dict = {}
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if args.command == "exact":
            payload = cmd_exact(args, files)
        elif args.command == "simulate":
            payload = cmd_simulate(args, files)
        else:
            payload = cmd_verify(args, files)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"input error: {exc}", file=stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE

    private = {k: payload.pop(k) for k in list(payload) if k.startswith("_")}
    extra = {"wall_time_s": round(time.perf_counter() - start, 6)} if args.timing else {}
    report = make_report(_echo(argv), files, **payload, **extra)

    if args.command == "simulate" and args.out == "csv":
        _emit("".join(f"{v}\n" for v in private["_samples"].tolist()), args.out_file, stdout)
        return EXIT_OK
    if args.command == "verify":
        stdout.write(private["_table"] + "\n")
        if args.out_file:
            _emit(dumps(report), args.out_file, stdout)
        return EXIT_VERIFY if private["_failed"] else EXIT_OK
    _emit(dumps(report), args.out_file, stdout)
    return EXIT_OK


def run_output(argv) -> tuple[int, str]:
    """Run the CLI in-process; return (exit code, stdout text)."""
    buf = io.StringIO()
    code = main(argv, stdout=buf, stderr=io.StringIO())
    return code, buf.getvalue()


if __name__ == "__main__":
    sys.exit(main())
