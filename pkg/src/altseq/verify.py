"""Verification suites: each check compares an independent computation with a formula.

Every check returns one or more :class:`CheckResult` rows. Statistical
tolerances come from ``data/acceptance.json``.
"""

from __future__ import annotations

import itertools
import json
import math
import tempfile
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import las_alphabet, las_alphabet_batch, las_bruteforce, las_distinct, las_distinct_batch
from .exact import (
    Distribution,
    enumerate_permutations,
    enumerate_words,
    exact_mean_iid,
    gamma2_iid,
    gamma2_uniform_closed,
    lil_constant,
    osc,
    osc_bounds,
    pattern_probability,
)
from .markov import (
    MarkovModel,
    augment_pair,
    augment_triple,
    augment_triple_stationary,
    iid_model,
    las_via_y,
    osc_markov,
    osc_plus_minus,
    triple_law_vector,
)
from .montecarlo import SimConfig, lil_trace, run
from .report import load_acceptance_config

SUITES = ("permutation", "iid", "markov", "all")


@dataclass
class CheckResult:
    id: str
    name: str
    reference: str
    expected: str
    observed: str
    tolerance: str
    verdict: str  # "pass" | "fail" | "skipped"
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.verdict != "fail"

    def to_dict(self) -> dict:
        return asdict(self)


def _row(cid, name, reference, expected, observed, tolerance, ok, skipped=False) -> CheckResult:
    verdict = "skipped" if skipped else ("pass" if ok else "fail")
    return CheckResult(cid, name, reference, str(expected), str(observed), tolerance, verdict)


def _fmt(x) -> str:
    return str(x) if isinstance(x, (Fraction, int)) else repr(float(x))


# --------------------------------------------------------------------------
# exact checks

def check_permutation_moments(cfg, fast=False) -> list[CheckResult]:
    rows = []
    for n in range(2, 9):
        law = enumerate_permutations(n)
        mean = Fraction(2 * n, 3) + Fraction(1, 6)
        rows.append(_row("A1", f"permutation mean, n={n}", "exact mean 2n/3 + 1/6",
                         mean, law.mean, "exact", law.mean == mean))
        if n >= 4:
            var = Fraction(8 * n, 45) - Fraction(13, 180)
            rows.append(_row("A2", f"permutation variance, n={n}", "exact variance 8n/45 - 13/180",
                             var, law.variance, "exact", law.variance == var))
    return rows


PATTERNS = [
    ("<>", Fraction(1, 3)),
    ("><>", Fraction(1, 6)),
    ("<><", Fraction(1, 6)),
    ("<><>", Fraction(2, 15)),
]


def _pattern_label(pattern: str) -> str:
    return "".join(f"t{i + 1}{c}" for i, c in enumerate(pattern)) + f"t{len(pattern) + 1}"


def check_patterns(cfg, fast=False) -> list[CheckResult]:
    rows = []
    for pattern, stated in PATTERNS:
        got = pattern_probability(pattern)
        rows.append(_row("A3", f"pattern probability {_pattern_label(pattern)}",
                         "stated up/down pattern constant", stated, got, "exact", got == stated))
    return rows


def check_gamma2_adjudication(cfg, fast=False) -> list[CheckResult]:
    opts = cfg["gamma2_adjudication"]
    mu = Distribution.uniform(2)
    general, closed = gamma2_iid(mu), gamma2_uniform_closed(2)
    expected = f"exactly one of {general} (general iid) or {closed} (uniform closed form)"
    name = "variance slope adjudication, uniform q=2"
    reference = "Var(LA_n) = n gamma^2 + O(1)"
    n_max = opts["n_max"]
    if fast and n_max > 8:
        return [_row("A4", name, reference, expected, f"not run: needs n up to {n_max}",
                     f"slope change < {opts['max_difference_change']}", True, skipped=True)]
    var = [enumerate_words(mu, n).variance for n in range(1, n_max + 1)]
    diffs = [b - a for a, b in zip(var, var[1:])]
    change = abs(diffs[-1] - diffs[-2])
    limit = diffs[-1]
    tol = opts["max_difference_change"]
    matches = {label: value for label, value in (("general iid", general), ("uniform closed form", closed))
               if abs(limit - value) < tol}
    if len(matches) == 1:
        label, value = next(iter(matches.items()))
        verdict = f"winner: {label} = {value}"
    else:
        verdict = f"no unique winner ({len(matches)} candidates match)"
    observed = f"Var_{n_max} - Var_{n_max - 1} = {float(limit):.8f}; {verdict}"
    ok = change < tol and len(matches) == 1
    return [_row("A4", name, reference, expected, observed,
                 f"slope change {float(change):.2e} < {tol}", ok)]


def _random_rational(rng, q) -> Distribution:
    while True:
        w = rng.integers(0, 10, size=q)
        if w.sum() > 0:
            total = int(w.sum())
            return Distribution(tuple(Fraction(int(v), total) for v in w))


def check_iid_mean(cfg, fast=False) -> list[CheckResult]:
    rng = np.random.default_rng(cfg["seeds"]["fuzz"])
    dists = [Distribution.uniform(q) for q in (2, 3, 4)]
    dists += [_random_rational(rng, int(rng.integers(2, 5))) for _ in range(cfg["fuzz"]["iid_mean_distributions"])]
    rows = []
    for mu in dists:
        bad = [n for n in range(1, 9) if enumerate_words(mu, n).mean != exact_mean_iid(mu, n)]
        label = "(" + ", ".join(str(p) for p in mu.probs) + ")"
        rows.append(_row("A5", f"iid mean, mu={label}, n=1..8", "n Osc(mu) + boundary terms",
                         "enumeration mean = formula", "equal" if not bad else f"differs at n={bad}",
                         "exact", not bad))
    return rows


def check_oracles(cfg, fast=False) -> list[CheckResult]:
    rows = []
    for n in range(1, 9):
        perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int8)
        fast_path = las_distinct_batch(perms, check=False)
        bad = sum(int(f) != las_bruteforce(p) for f, p in zip(fast_path, perms))
        rows.append(_row("A6", f"distinct path vs brute force, all of S_{n}", "LAS oracle agreement",
                         "0 mismatches", f"{bad} mismatches", "exact", bad == 0))
    for q in range(1, 5):
        bad = total = 0
        for n in range(1, 9):
            words = np.array(list(itertools.product(range(1, q + 1), repeat=n)), dtype=np.int8)
            alpha = las_alphabet_batch(words)
            for a, w in zip(alpha.tolist(), words.tolist()):
                b = las_bruteforce(w)
                bad += a != b or las_via_y(w) != b
            total += len(words)
        rows.append(_row("A6", f"alphabet path vs brute force vs gradient flips, all words q={q}, n<=8",
                         "LAS oracle agreement", "0 mismatches", f"{bad} of {total} mismatch", "exact", bad == 0))
    opts = cfg["fuzz"]
    rng = np.random.default_rng(cfg["seeds"]["fuzz"] + 1)
    bad = 0
    n = opts["word_case_length"]
    for i in range(opts["word_cases"]):
        if i % 4 == 3:
            seq = rng.permutation(n) + 1
            b = las_bruteforce(seq)
            bad += las_distinct(seq) != b or las_alphabet(seq) != b
        else:
            seq = rng.integers(1, int(rng.integers(2, 11)) + 1, size=n)
            b = las_bruteforce(seq)
            bad += las_alphabet(seq) != b or las_via_y(seq) != b
    rows.append(_row("A6", f"fuzzed sequences, {opts['word_cases']} cases at n={n}", "LAS oracle agreement",
                     "0 mismatches", f"{bad} mismatches", "exact", bad == 0))
    return rows


def check_osc_bounds(cfg, fast=False) -> list[CheckResult]:
    rng = np.random.default_rng(cfg["seeds"]["fuzz"] + 2)
    points = cfg["fuzz"]["osc_bounds_points"]
    rows = []
    for q in range(2, 11):
        bad = 0
        worst = math.inf
        for p in rng.dirichlet(np.ones(q), size=points):
            mu = Distribution(tuple((p / p.sum()).tolist()))
            lo, hi = osc_bounds(mu)
            o = osc(mu)
            slack = min(o - lo, hi - o)
            worst = min(worst, slack)
            bad += slack < -1e-15
        rows.append(_row("A7", f"oscillation bounds, q={q}, {points} points",
                         "(1 - sum p^2)/2 <= Osc <= 2(1 - sum p^3)/3",
                         "0 violations", f"{bad} violations (min slack {worst:.3e})", "1e-15", bad == 0))
    return rows


def _random_chain(rng, q) -> MarkovModel:
    while True:
        P = rng.random((q, q)) ** 3
        if rng.random() < 0.5:
            P *= rng.random((q, q)) > 0.3
        if np.any(P.sum(axis=1) == 0):
            continue
        P /= P.sum(axis=1, keepdims=True)
        model = MarkovModel(P)
        if model.ergodic and np.all(np.diag(P) < 1):
            return model


def check_markov_stationarity(cfg, fast=False) -> list[CheckResult]:
    rng = np.random.default_rng(cfg["seeds"]["fuzz"] + 3)
    tol = cfg["tolerances"]
    count = cfg["fuzz"]["markov_chains"]
    pair_res = triple_res = balance = 0.0
    for _ in range(count):
        model = _random_chain(rng, int(rng.integers(2, 7)))
        Q, law = augment_pair(model)
        pair_res = max(pair_res, float(np.max(np.abs(law @ Q - law))), abs(law.sum() - 1))
        T = augment_triple(model)
        vec = triple_law_vector(augment_triple_stationary(model), model.q)
        triple_res = max(triple_res, float(np.max(np.abs(vec @ T - vec))), abs(vec.sum() - 1))
        plus, minus = osc_plus_minus(model)
        balance = max(balance, abs(plus - minus))
    ref = "augmented chain stationary formulas"
    return [
        _row("A8", f"pair chain stationary law, {count} chains", ref, "fixed point",
             f"max residual {pair_res:.3e}", f"<= {tol['stationary_residual']}",
             pair_res <= tol["stationary_residual"]),
        _row("A8", f"triple chain stationary law, {count} chains", ref, "fixed point",
             f"max residual {triple_res:.3e}", f"<= {tol['stationary_residual']}",
             triple_res <= tol["stationary_residual"]),
        _row("A8", f"peak rate equals trough rate, {count} chains", "Osc+ = Osc-", "equal",
             f"max gap {balance:.3e}", f"<= {tol['osc_balance']}", balance <= tol["osc_balance"]),
    ]


def check_iid_reduction(cfg, fast=False) -> list[CheckResult]:
    rng = np.random.default_rng(cfg["seeds"]["fuzz"] + 4)
    tol = cfg["tolerances"]["iid_reduction"]
    count = cfg["fuzz"]["iid_reduction"]
    gap = 0.0
    for _ in range(count):
        p = rng.dirichlet(np.ones(int(rng.integers(2, 9))))
        mu = Distribution(tuple((p / p.sum()).tolist()))
        gap = max(gap, abs(osc_markov(iid_model(mu.probs)) - float(osc(mu))))
    return [_row("A9", f"Markov oscillation of iid rows, {count} distributions",
                 "Markov Osc reduces to iid Osc", "equal", f"max gap {gap:.3e}", f"<= {tol}", gap <= tol)]


# --------------------------------------------------------------------------
# statistical checks

def _clt(cid, name, reference, config, threshold) -> CheckResult:
    stats = run(config)
    ks = stats.ks_distance
    return _row(cid, name, reference, f"KS <= {threshold}", f"KS = {ks:.5f}",
                f"{threshold} (calibrated)", ks is not None and ks <= threshold)


def check_clt_permutation(cfg, fast=False) -> list[CheckResult]:
    c = cfg["clt"]
    config = SimConfig(model="perm", n=c["n"], trials=c["trials"], seed=cfg["seeds"]["clt_permutation"])
    return [_clt("A10", f"permutation CLT, n={c['n']}, trials={c['trials']}",
                 "(LA_n - exact mean) / sqrt(8n/45) => N(0,1)", config, c["ks_permutation"])]


def check_clt_iid(cfg, fast=False) -> list[CheckResult]:
    c = cfg["clt"]
    config = SimConfig(model="word", n=c["n"], trials=c["trials"], seed=cfg["seeds"]["clt_iid"],
                       dist=Distribution.uniform(3))
    return [_clt("A10", f"iid uniform q=3 CLT, n={c['n']}, trials={c['trials']}",
                 "(LA_n - exact mean) / sqrt(n gamma^2) => N(0,1)", config, c["ks_iid_q3"])]


def _lln(name, reference, config, target, k) -> CheckResult:
    stats = run(config)
    n = config.n
    mean = stats.mean / n
    se = math.sqrt(stats.variance / stats.count) / n
    return _row("A11", name, reference, _fmt(target), f"{mean:.7f} (se {se:.2e})",
                f"{k} standard errors", abs(mean - target) <= k * se)


def check_lln_permutation(cfg, fast=False) -> list[CheckResult]:
    c = cfg["lln"]
    config = SimConfig(model="perm", n=c["n"], trials=c["trials"], seed=cfg["seeds"]["lln"])
    return [_lln(f"permutation LA_n/n, n={c['n']}", "LA_n/n -> 2/3", config, 2 / 3, c["standard_errors"])]


def check_lln_iid(cfg, fast=False) -> list[CheckResult]:
    c = cfg["lln"]
    rows = []
    for i, q in enumerate(c["iid_q"]):
        config = SimConfig(model="word", n=c["n"], trials=c["trials"], seed=cfg["seeds"]["lln"] + 1 + i,
                           dist=Distribution.uniform(q))
        rows.append(_lln(f"iid uniform q={q} LA_n/n, n={c['n']}", "LA_n/n -> 2/3 - 1/(3q)", config,
                         2 / 3 - 1 / (3 * q), c["standard_errors"]))
    return rows


def check_lln_markov(cfg, fast=False) -> list[CheckResult]:
    c = cfg["lln"]
    config = SimConfig(model="markov", n=c["n"], trials=c["trials"], seed=cfg["seeds"]["lln"] + 10,
                       chain=MarkovModel(c["sticky_matrix"]))
    return [_lln(f"sticky Markov LA_n/n, n={c['n']}", "LA_n/n -> Osc+ + Osc-", config,
                 c["sticky_osc"], c["standard_errors"])]


def check_lil(cfg, fast=False) -> list[CheckResult]:
    c = cfg["lil"]
    config = SimConfig(model="perm", n=1, trials=1, seed=cfg["seeds"]["lil"])
    trace = lil_trace(config, n_max=c["n_max"], checkpoints=c["checkpoints"])
    ok = (len(trace.points) > 0 and math.isfinite(trace.running_max) and math.isfinite(trace.running_min)
          and all(math.isfinite(s) for _, s in trace.points))
    return [_row("A12", f"iterated logarithm trace, n_max={c['n_max']} (diagnostic)",
                 "limsup (LA_n - E LA_n)/sqrt(n log log n) = 4/(3 sqrt 5)",
                 f"reference {lil_constant():.10f}",
                 f"running max {trace.running_max:.4f} at n={trace.argmax}, "
                 f"running min {trace.running_min:.4f} at n={trace.argmin}, {len(trace.points)} checkpoints",
                 "report present and finite", ok)]


def _reproducible(cfg, model) -> CheckResult:
    from .cli import run_output  # deferred: cli imports this module

    opts = cfg["reproducibility"]
    sizes = opts[model]
    argv = ["simulate", "--model", model, "--n", str(sizes["n"]), "--trials", str(sizes["trials"]),
            "--seed", str(cfg["seeds"]["reproducibility"])]
    outputs = {}
    with tempfile.TemporaryDirectory() as tmp:
        if model == "word":
            argv += ["--dist", f"uniform:{sizes['q']}"]
        if model == "markov":
            path = Path(tmp) / "chain.json"
            path.write_text(json.dumps({"P": cfg["lln"]["sticky_matrix"]}))
            argv += ["--matrix", str(path)]
        for threads in opts["threads"]:
            for fmt in ("json", "csv"):
                code, text = run_output(argv + ["--out", fmt, "--threads", str(threads)])
                outputs[(threads, fmt)] = (code, text)
    distinct = {fmt: len({v for (_, f), v in outputs.items() if f == fmt}) for fmt in ("json", "csv")}
    ok = all(code == 0 for code, _ in outputs.values()) and all(v == 1 for v in distinct.values())
    return _row("A13", f"simulate {model} reproducibility across {opts['threads']} threads",
                "per-trial seeded streams", "byte-identical json and csv",
                "identical" if ok else f"distinct outputs {distinct}", "exact", ok)


def check_repro_permutation(cfg, fast=False):
    return [_reproducible(cfg, "perm")]


def check_repro_word(cfg, fast=False):
    return [_reproducible(cfg, "word")]


def check_repro_markov(cfg, fast=False):
    return [_reproducible(cfg, "markov")]


# --------------------------------------------------------------------------
# suites

CHECKS = {
    "permutation_moments": check_permutation_moments,
    "patterns": check_patterns,
    "gamma2_adjudication": check_gamma2_adjudication,
    "iid_mean": check_iid_mean,
    "oracles": check_oracles,
    "osc_bounds": check_osc_bounds,
    "markov_stationarity": check_markov_stationarity,
    "iid_reduction": check_iid_reduction,
    "clt_permutation": check_clt_permutation,
    "clt_iid": check_clt_iid,
    "lln_permutation": check_lln_permutation,
    "lln_iid": check_lln_iid,
    "lln_markov": check_lln_markov,
    "lil": check_lil,
    "repro_permutation": check_repro_permutation,
    "repro_word": check_repro_word,
    "repro_markov": check_repro_markov,
}

SUITE_CHECKS = {
    "permutation": ["permutation_moments", "patterns", "oracles", "clt_permutation", "lln_permutation",
                    "lil", "repro_permutation"],
    "iid": ["gamma2_adjudication", "iid_mean", "oracles", "osc_bounds", "clt_iid", "lln_iid", "repro_word"],
    "markov": ["gamma2_adjudication", "markov_stationarity", "iid_reduction", "lln_markov", "repro_markov"],
}
SUITE_CHECKS["all"] = list(dict.fromkeys(c for s in ("permutation", "iid", "markov") for c in SUITE_CHECKS[s]))


def run_checks(names, fast=False, cfg=None) -> list[CheckResult]:
    cfg = cfg or load_acceptance_config()
    rows = []
    for name in names:
        if name not in CHECKS:
            raise KeyError(f"unknown check {name!r}")
        start = time.perf_counter()
        produced = CHECKS[name](cfg, fast)
        elapsed = (time.perf_counter() - start) / max(1, len(produced))
        for row in produced:
            row.seconds = round(elapsed, 3)
        rows.extend(produced)
    return rows


def run_suite(suite: str, fast=False, only=None, cfg=None) -> list[CheckResult]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    names = SUITE_CHECKS[suite]
    if only:
        names = [n for n in names if n in only]
    return run_checks(names, fast=fast, cfg=cfg)


def format_table(rows: list[CheckResult]) -> str:
    headers = ("id", "check", "reference", "expected", "observed", "tolerance", "verdict")
    table = [headers] + [(r.id, r.name, r.reference, r.expected, r.observed, r.tolerance, r.verdict.upper())
                         for r in rows]
    widths = [min(60, max(len(str(row[i])) for row in table)) for i in range(len(headers))]
    lines = []
    for k, row in enumerate(table):
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
