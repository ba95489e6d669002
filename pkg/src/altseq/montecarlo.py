"""Seeded Monte Carlo harness for LAS statistics.

Every trial ``t`` draws from its own PCG64 stream seeded by
``SeedSequence(master_seed, spawn_key=(t,))``, so results do not depend on
how trials are scheduled across worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import ndtr

from .core import StreamingLAS, las_alphabet_batch, las_distinct_batch, rank_map
from .exact import (
    Distribution,
    exact_mean_iid,
    gamma2_iid,
    iid_mean_terms,
    las_distribution_iid,
    lil_constant,
    perm_clt_sigma2,
    perm_mean,
    perm_variance,
    transfer_las_distribution,
)
from .markov import MarkovModel, osc_markov, simulate_markov

__all__ = [
    "GENERATOR",
    "MAX_N",
    "MAX_TRIALS",
    "SimConfig",
    "SummaryStats",
    "LILTrace",
    "SlopeEstimate",
    "stream_rng",
    "worker_count",
    "sample_permutation",
    "sample_word",
    "run",
    "ks_normal",
    "lil_trace",
    "variance_slope",
]

GENERATOR = {
    "bit_generator": "PCG64",
    "library": f"numpy {np.__version__}",
    "stream_derivation": "SeedSequence(entropy=master_seed, spawn_key=(stream,))",
}

MAX_N = 10**8
MAX_TRIALS = 10**7
MAX_CELLS = 10**11
BLOCK_CELLS = 1 << 20


def stream_rng(master_seed: int, stream: int) -> np.random.Generator:
    """Independent generator for ``(master_seed, stream)``."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def worker_count(threads: int | None = None) -> int:
    """Number of worker threads, capped by ``ALTSEQ_THREADS`` when set."""
    cap = os.environ.get("ALTSEQ_THREADS")
    n = threads if threads is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


# --------------------------------------------------------------------------
# samplers

def sample_permutation(n: int, rng: np.random.Generator, method: str = "shuffle") -> np.ndarray:
    """Uniform random permutation of 1..n.

    ``"shuffle"`` is a Fisher-Yates shuffle; ``"rank"`` ranks ``n`` iid
    uniforms. Both give the uniform law on the symmetric group.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if method == "shuffle":
        return rng.permutation(n) + 1
    if method == "rank":
        return rank_map(rng.random(n))
    raise ValueError(f"unknown permutation sampler {method!r}")


def _letter_cdf(mu: Distribution) -> np.ndarray:
    cdf = np.cumsum(mu.as_float())
    cdf[-1] = 1.0
    return cdf


def sample_word(mu: Distribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """iid letters from ``mu`` by inverse CDF, one uniform per letter."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.searchsorted(_letter_cdf(mu), rng.random(n), side="right") + 1


# --------------------------------------------------------------------------
# configuration and results

@dataclass
class SimConfig:
    """One Monte Carlo experiment.

    ``model`` is ``"perm"``, ``"word"`` or ``"markov"``. For ``"markov"``,
    ``n`` counts transitions, so each path holds ``n + 1`` letters.
    ``sampler`` picks the permutation sampler: ``"shuffle"`` or ``"rank"``
    (LAS is read directly off the uniforms, which the rank map preserves).
    """

    model: str
    n: int
    trials: int
    seed: int
    dist: Distribution | None = None
    chain: MarkovModel | None = None
    sampler: str = "rank"
    histogram_bin: int = 1
    keep_samples: bool = False
    sample_cap: int = 10**6

    def validate(self) -> None:
        if self.model not in ("perm", "word", "markov"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n > MAX_N:
            raise ValueError(f"n = {self.n} exceeds the limit {MAX_N}")
        if self.trials > MAX_TRIALS:
            raise ValueError(f"trials = {self.trials} exceeds the limit {MAX_TRIALS}")
        if self.n * self.trials > MAX_CELLS:
            raise ValueError(f"n * trials = {self.n * self.trials} exceeds the limit {MAX_CELLS}")
        if self.model == "word" and self.dist is None:
            raise ValueError("word model needs a distribution")
        if self.model == "markov":
            if self.chain is None:
                raise ValueError("markov model needs a transition matrix")
            self.chain.require_ergodic()
        if self.sampler not in ("rank", "shuffle"):
            raise ValueError(f"unknown permutation sampler {self.sampler!r}")
        if self.histogram_bin < 1:
            raise ValueError("histogram_bin must be >= 1")


@dataclass
class SummaryStats:
    count: int
    mean: float
    variance: float
    min: int
    max: int
    center: float | None
    scale: float | None
    center_source: str
    scale_source: str
    ks_distance: float | None
    degenerate: bool
    histogram: dict
    standardized: np.ndarray = field(repr=False)
    samples: np.ndarray | None = field(default=None, repr=False)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "min": self.min,
            "max": self.max,
            "center": self.center,
            "scale": self.scale,
            "center_source": self.center_source,
            "scale_source": self.scale_source,
            "ks_distance": self.ks_distance,
            "degenerate": self.degenerate,
            "histogram": {str(k): v for k, v in self.histogram.items()},
        }
        if self.samples is not None:
            out["samples"] = self.samples.tolist()
        return out


def _reference(config: SimConfig) -> tuple:
    """(center, center_source, scale or None, scale_source) for standardising."""
    n = config.n
    if config.model == "perm":
        return float(perm_mean(n)), "closed_form", math.sqrt(n * float(perm_clt_sigma2())), "closed_form"
    if config.model == "word":
        g2 = float(gamma2_iid(config.dist))
        scale = math.sqrt(n * g2) if g2 > 0 else None
        return float(exact_mean_iid(config.dist, n)), "closed_form", scale, "closed_form"
    return n * osc_markov(config.chain), "closed_form", None, "simulation"


def _run_block(config: SimConfig, trials: range, out: np.ndarray) -> None:
    n = config.n
    if config.model == "markov":
        for t in trials:
            path = simulate_markov(config.chain, n, stream_rng(config.seed, t))
            out[t] = las_alphabet_batch(path[None, :])[0]
        return
    rows = max(1, BLOCK_CELLS // n)
    cdf = _letter_cdf(config.dist) if config.model == "word" else None
    shuffle = config.model == "perm" and config.sampler == "shuffle"
    buf = np.empty((rows, n), dtype=np.int64 if shuffle else np.float64)
    idx = list(trials)
    for start in range(0, len(idx), rows):
        chunk = idx[start:start + rows]
        for i, t in enumerate(chunk):
            rng = stream_rng(config.seed, t)
            if shuffle:
                buf[i] = rng.permutation(n)
            else:
                rng.random(out=buf[i])
        block = buf[:len(chunk)]
        if config.model == "word":
            letters = np.searchsorted(cdf, block, side="right").astype(np.int16)
            out[chunk] = las_alphabet_batch(letters)
        else:
            out[chunk] = las_distinct_batch(block, check=False)


def ks_normal(sample) -> float:
    """Kolmogorov-Smirnov distance ``sup |F_hat - Phi|`` to the standard normal.

    ``Phi`` is ``scipy.special.ndtr`` (Cephes erf/erfc, accurate to double
    precision). Ties are handled exactly.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    m = x.size
    if m < 100:
        raise ValueError(f"KS distance needs at least 100 points, got {m}")
    cdf = ndtr(x)
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - cdf), np.max(cdf - (i - 1) / m)))


def run(config: SimConfig, threads: int | None = None) -> SummaryStats:
    """Run ``config.trials`` independent trials and summarise their LAS values.

    The result is bit-identical for any number of worker threads.
    """
    config.validate()
    workers = worker_count(threads)
    las = np.zeros(config.trials, dtype=np.int64)
    bounds = np.linspace(0, config.trials, workers + 1).astype(int)
    blocks = [range(bounds[i], bounds[i + 1]) for i in range(workers) if bounds[i] < bounds[i + 1]]
    if len(blocks) == 1:
        _run_block(config, blocks[0], las)
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            for fut in [pool.submit(_run_block, config, b, las) for b in blocks]:
                fut.result()

    count = config.trials
    s1 = int(las.sum())
    s2 = int(np.dot(las, las))
    mean = s1 / count
    degenerate = count < 2
    variance = 0.0 if degenerate else float(Fraction(s2 * count - s1 * s1, count * (count - 1)))

    center, center_source, scale, scale_source = _reference(config)
    if scale is None and not degenerate and variance > 0:
        scale = math.sqrt(variance)
    kept = las[: config.sample_cap]
    if scale:
        standardized = (kept - center) / scale
    else:
        standardized = np.zeros(0)
    ks = ks_normal(standardized) if standardized.size >= 100 else None

    width = config.histogram_bin
    keys, counts = np.unique((las // width) * width, return_counts=True)
    return SummaryStats(
        count=count,
        mean=mean,
        variance=variance,
        min=int(las.min()),
        max=int(las.max()),
        center=center,
        scale=scale,
        center_source=center_source,
        scale_source=scale_source,
        ks_distance=ks,
        degenerate=degenerate,
        histogram=dict(zip(keys.tolist(), counts.tolist())),
        standardized=standardized,
        samples=las.copy() if config.keep_samples else None,
        metadata={"generator": dict(GENERATOR), "sampler": _sampler_name(config)},
    )


def _sampler_name(config: SimConfig) -> str:
    if config.model == "perm":
        return "fisher-yates shuffle" if config.sampler == "shuffle" else "rank map of iid uniforms"
    if config.model == "word":
        return "inverse cdf"
    return "stationary start, inverse cdf transitions"


# --------------------------------------------------------------------------
# law of the iterated logarithm diagnostic

@dataclass
class LILTrace:
    points: list  # [(n, statistic)] at geometric checkpoints
    running_max: float
    running_min: float
    argmax: int
    argmin: int
    n_start: int
    n_max: int
    reference: float
    center_source: str
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "points": [[n, s] for n, s in self.points],
            "running_max": self.running_max,
            "running_min": self.running_min,
            "argmax": self.argmax,
            "argmin": self.argmin,
            "n_start": self.n_start,
            "n_max": self.n_max,
            "reference_limsup": self.reference,
            "reference_liminf": -self.reference,
            "center_source": self.center_source,
        }


def _trace_center(config: SimConfig, ns: np.ndarray) -> np.ndarray:
    if config.model == "perm":
        return 2.0 * ns / 3.0 + 1.0 / 6.0
    if config.model == "word":
        slope, intercept, coeffs = iid_mean_terms(config.dist)
        p = config.dist.as_float()
        tail = np.array([float(c) for c in coeffs])
        return ns * float(slope) + float(intercept) + (p[None, :] ** ns[:, None]) @ tail
    return (ns - 1) * osc_markov(config.chain)


def lil_trace(config: SimConfig, n_max: int, checkpoints: int = 40, n_start: int = 16,
              chunk: int = 1 << 20) -> LILTrace:
    """Track ``(LA_n - center_n) / sqrt(n log log n)`` along one trajectory.

    The LAS of every prefix is updated incrementally; the running max/min run
    over all ``n_start <= n <= n_max``. The output is a diagnostic only.
    ``config.n`` and ``config.trials`` are ignored; ``config.seed`` picks the
    trajectory.
    """
    if n_max < 100:
        raise ValueError("n_max must be >= 100")
    n_start = max(3, n_start)
    rng = stream_rng(config.seed, 0)
    marks = np.unique(np.geomspace(n_start, n_max, checkpoints).astype(np.int64))
    acc = StreamingLAS()
    best, worst = -math.inf, math.inf
    argbest = argworst = n_start
    points = []

    if config.model == "markov":
        path = simulate_markov(config.chain, n_max - 1, rng)

    done = 0
    while done < n_max:
        m = min(chunk, n_max - done)
        if config.model == "perm":
            vals = rng.random(m)
        elif config.model == "word":
            vals = np.searchsorted(_letter_cdf(config.dist), rng.random(m), side="right")
        else:
            vals = path[done:done + m]
        prefix = acc.extend(vals)
        ns = np.arange(done + 1, done + m + 1, dtype=np.int64)
        keep = ns >= n_start
        if keep.any():
            nk = ns[keep].astype(float)
            stat = (prefix[keep] - _trace_center(config, nk)) / np.sqrt(nk * np.log(np.log(nk)))
            i, j = int(np.argmax(stat)), int(np.argmin(stat))
            if stat[i] > best:
                best, argbest = float(stat[i]), int(nk[i])
            if stat[j] < worst:
                worst, argworst = float(stat[j]), int(nk[j])
            hit = np.isin(ns[keep], marks)
            points.extend(zip(ns[keep][hit].tolist(), stat[hit].tolist()))
        done += m

    return LILTrace(
        points=points,
        running_max=best,
        running_min=worst,
        argmax=argbest,
        argmin=argworst,
        n_start=n_start,
        n_max=n_max,
        reference=lil_constant(),
        center_source="closed_form",
        metadata={"generator": dict(GENERATOR), "sampler": _sampler_name(config)},
    )


# --------------------------------------------------------------------------
# variance slope

@dataclass
class SlopeEstimate:
    slope: float
    stderr: float
    method: str  # "exact" | "simulation"
    points: list  # [(n, variance)]


def _exact_variance(config: SimConfig, n: int):
    if config.model == "perm":
        return perm_variance(n)
    if config.model == "word":
        return las_distribution_iid(config.dist, n).variance
    chain = config.chain
    hist = transfer_las_distribution(chain.pi.tolist(), chain.P.tolist(), n + 1)
    mean = sum(k * w for k, w in hist.items())
    return sum(k * k * w for k, w in hist.items()) - mean * mean


def variance_slope(config: SimConfig, n_grid, trials: int | None = None, exact: bool = False,
                   threads: int | None = None) -> SlopeEstimate:
    """Estimate ``lim Var(LA_n) / n``.

    ``exact=True`` computes exact variances at each grid point (closed form,
    or transfer matrices for words and chains) and returns the last
    difference quotient; ``stderr`` is then the change from the previous
    quotient. Otherwise each grid point is simulated with ``trials`` trials
    and the slope is fitted by weighted least squares.
    """
    grid = sorted(int(n) for n in n_grid)
    if len(grid) < 2:
        raise ValueError("n_grid needs at least two points")
    if exact:
        vals = [_exact_variance(config, n) for n in grid]
        quot = [(b - a) / (m - k) for (k, a), (m, b) in zip(zip(grid, vals), zip(grid[1:], vals[1:]))]
        slope = quot[-1]
        err = abs(quot[-1] - quot[-2]) if len(quot) > 1 else float("nan")
        return SlopeEstimate(slope=slope, stderr=float(err), method="exact", points=list(zip(grid, vals)))

    trials = trials or config.trials
    if trials < 3:
        raise ValueError("simulation slope needs at least 3 trials per point")
    ns, vs, ws = [], [], []
    for i, n in enumerate(grid):
        seed = int(np.random.SeedSequence(int(config.seed), spawn_key=(i,)).generate_state(1, np.uint64)[0])
        cfg = SimConfig(model=config.model, n=n, trials=trials, seed=seed, dist=config.dist,
                        chain=config.chain, sampler=config.sampler)
        var = run(cfg, threads=threads).variance
        ns.append(n)
        vs.append(var)
        # normal-theory standard error of a sample variance
        ws.append(1.0 / max(var * var * 2.0 / (trials - 1), 1e-300))
    x, y, w = map(np.asarray, (ns, vs, ws))
    if np.all(y == 0):
        return SlopeEstimate(slope=0.0, stderr=0.0, method="simulation", points=list(zip(ns, vs)))
    xm = np.sum(w * x) / np.sum(w)
    ym = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (x - xm) ** 2)
    slope = float(np.sum(w * (x - xm) * (y - ym)) / sxx)
    return SlopeEstimate(slope=slope, stderr=float(math.sqrt(1.0 / sxx)), method="simulation",
                         points=list(zip(ns, vs)))
