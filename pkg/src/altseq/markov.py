"""Finite Markov chains, their gradient-augmented chains, and Markov oscillation."""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from .core import as_sequence

__all__ = [
    "MarkovModel",
    "NotErgodicError",
    "stationary",
    "closed_classes",
    "augment_pair",
    "augment_triple",
    "augment_triple_stationary",
    "osc_plus_minus",
    "osc_markov",
    "y_process",
    "las_via_y",
    "simulate_markov",
    "iid_model",
    "triple_law_vector",
]

ROW_TOL = 1e-12


class NotErgodicError(ValueError):
    pass


def _support_graph(P: np.ndarray) -> list[list[int]]:
    return [np.flatnonzero(row > 0).tolist() for row in P]


def _reach(adj: list[list[int]], start: int) -> set[int]:
    seen = {start}
    todo = [start]
    while todo:
        u = todo.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen


def closed_classes(P: np.ndarray) -> list[set[int]]:
    """Closed communicating classes of the support graph of ``P``."""
    adj = _support_graph(np.asarray(P))
    reach = [_reach(adj, u) for u in range(len(adj))]
    classes = []
    for u in range(len(adj)):
        cls = {v for v in reach[u] if u in reach[v]}
        # closed: nothing reachable from u lies outside its class
        if reach[u] == cls and cls not in classes:
            classes.append(cls)
    return classes


def _period(adj: list[list[int]]) -> int:
    level = {0: 0}
    queue = deque([0])
    g = 0
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
    return g


def _validate_stochastic(P) -> np.ndarray:
    P = np.array(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise ValueError(f"transition matrix must be square, got shape {P.shape}")
    if np.any(P < 0):
        r, c = np.argwhere(P < 0)[0]
        raise ValueError(f"negative entry at row {r}, column {c}")
    sums = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1) > ROW_TOL)
    if bad.size:
        r = int(bad[0])
        raise ValueError(f"row {r} sums to {sums[r]!r}, not 1")
    return P


def _irreducible(P: np.ndarray) -> bool:
    adj = _support_graph(P)
    return len(_reach(adj, 0)) == len(adj) and all(0 in _reach(adj, u) for u in range(len(adj)))


def stationary(P, tol: float = 1e-13, max_iter: int = 10**6, allow_transient: bool = False) -> np.ndarray:
    """Stationary row vector of a stochastic matrix.

    Solves ``pi (P - I) = 0`` with the last equation replaced by
    ``sum(pi) = 1``; falls back to power iteration when that system is
    singular to working precision.

    With ``allow_transient=True`` a reducible chain is accepted as long as
    it has a single closed class (the augmented gradient chains have
    transient states); transient states then get mass 0.

    Raises
    ------
    NotErgodicError
        If the chain is reducible (or, with ``allow_transient``, has more
        than one closed class).
    """
    P = _validate_stochastic(P)
    unique = len(closed_classes(P)) == 1 if allow_transient else _irreducible(P)
    if not unique:
        raise NotErgodicError("no unique stationary distribution")
    q = P.shape[0]
    A = P.T - np.eye(q)
    A[-1, :] = 1.0
    b = np.zeros(q)
    b[-1] = 1.0
    try:
        if np.linalg.cond(A) > 1e12:
            raise np.linalg.LinAlgError("ill-conditioned")
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        pi = np.full(q, 1.0 / q)
        for _ in range(max_iter):
            nxt = pi @ P
            if np.max(np.abs(nxt - pi)) < tol:
                pi = nxt
                break
            pi = nxt
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


class MarkovModel:
    """Row-stochastic transition matrix on the ordered states ``1..q``.

    Attributes
    ----------
    P : ndarray, shape (q, q)
    pi : ndarray, shape (q,)
        Stationary law (``None`` when not unique).
    irreducible, aperiodic : bool
    """

    def __init__(self, P):
        self.P = _validate_stochastic(P)
        adj = _support_graph(self.P)
        self.irreducible = _irreducible(self.P)
        self.aperiodic = self.irreducible and _period(adj) == 1
        try:
            self.pi = stationary(self.P)
        except NotErgodicError:
            self.pi = None

    @property
    def q(self) -> int:
        return self.P.shape[0]

    @property
    def ergodic(self) -> bool:
        return self.irreducible and self.aperiodic

    def require_ergodic(self) -> None:
        if not self.ergodic:
            raise NotErgodicError("chain is not ergodic (irreducible and aperiodic)")

    def __repr__(self):
        return f"MarkovModel(q={self.q}, ergodic={self.ergodic})"


def iid_model(probs) -> MarkovModel:
    """Chain whose rows all equal ``probs`` (iid letters)."""
    p = np.asarray([float(v) for v in probs])
    return MarkovModel(np.tile(p, (p.size, 1)))


def _require_gradient_ergodic(model: MarkovModel) -> None:
    model.require_ergodic()
    stuck = np.flatnonzero(np.diag(model.P) >= 1.0)
    if stuck.size:
        raise NotErgodicError("chain not ergodic on gradient states")


def _pair_index(r: int, up: bool) -> int:
    return 2 * r + (0 if up else 1)


def augment_pair(model: MarkovModel) -> tuple[np.ndarray, np.ndarray]:
    """Transition matrix and stationary law of the (letter, gradient) chain.

    States are ordered ``(1,+1), (1,-1), (2,+1), ...``. A move up sets the
    gradient to +1, a move down to -1, a repeat keeps it. The returned law is
    ``pi_(r,+1) = sum_{s<r} pi_s p_sr / (1 - p_rr)`` and
    ``pi_(r,-1) = sum_{s>r} pi_s p_sr / (1 - p_rr)``.
    """
    _require_gradient_ergodic(model)
    P, pi, q = model.P, model.pi, model.q
    Q = np.zeros((2 * q, 2 * q))
    for r in range(q):
        for up in (True, False):
            i = _pair_index(r, up)
            for s in range(q):
                new_up = up if s == r else s > r
                Q[i, _pair_index(s, new_up)] += P[r, s]
    law = np.zeros(2 * q)
    for r in range(q):
        inflow = pi * P[:, r]
        law[_pair_index(r, True)] = inflow[:r].sum() / (1 - P[r, r])
        law[_pair_index(r, False)] = inflow[r + 1:].sum() / (1 - P[r, r])
    return Q, law


_TRIPLE_SIGNS = [(1, 1), (1, -1), (-1, 1), (-1, -1)]


def _triple_index(r: int, prev: int, cur: int) -> int:
    return 4 * r + _TRIPLE_SIGNS.index((prev, cur))


def augment_triple(model: MarkovModel) -> np.ndarray:
    """Transition matrix of the (letter, previous gradient, gradient) chain."""
    _require_gradient_ergodic(model)
    P, q = model.P, model.q
    T = np.zeros((4 * q, 4 * q))
    for r in range(q):
        for prev, cur in _TRIPLE_SIGNS:
            i = _triple_index(r, prev, cur)
            for s in range(q):
                new = cur if s == r else (1 if s > r else -1)
                T[i, _triple_index(s, cur, new)] += P[r, s]
    return T


def _escape_weights(model: MarkovModel) -> np.ndarray:
    """``w[t, s, r] = pi_t p_ts p_sr / (1 - p_ss)``."""
    P, pi = model.P, model.pi
    return pi[:, None, None] * P[:, :, None] * (P / (1 - np.diag(P))[:, None])[None, :, :]


def augment_triple_stationary(model: MarkovModel) -> dict:
    """Stationary law of the triple chain, keyed by ``(r, prev, cur)``.

    ``r`` is 1-based. Each mass sums ``pi_t p_ts p_sr / (1 - p_ss)`` over
    ``t < s <= r`` for (+1,+1), ``t > s >= r`` for (-1,-1), ``t < s > r`` for
    (+1,-1) and ``t > s < r`` for (-1,+1).
    """
    _require_gradient_ergodic(model)
    q = model.q
    w = _escape_weights(model)
    t, s, r = np.meshgrid(np.arange(q), np.arange(q), np.arange(q), indexing="ij")
    rules = {
        (1, 1): (t < s) & (s <= r),
        (-1, -1): (t > s) & (s >= r),
        (1, -1): (t < s) & (s > r),
        (-1, 1): (t > s) & (s < r),
    }
    law = {}
    for (prev, cur), mask in rules.items():
        per_r = np.where(mask, w, 0.0).sum(axis=(0, 1))
        for x in range(q):
            law[(x + 1, prev, cur)] = float(per_r[x])
    return law


def triple_law_vector(law: dict, q: int) -> np.ndarray:
    """Arrange :func:`augment_triple_stationary` output in matrix state order."""
    vec = np.zeros(4 * q)
    for (r, prev, cur), mass in law.items():
        vec[_triple_index(r - 1, prev, cur)] = mass
    return vec


def osc_plus_minus(model: MarkovModel) -> tuple[float, float]:
    """Stationary rates of peaks (``t < s > r``) and troughs (``t > s < r``)."""
    _require_gradient_ergodic(model)
    q = model.q
    w = _escape_weights(model)
    t, s, r = np.meshgrid(np.arange(q), np.arange(q), np.arange(q), indexing="ij")
    plus = float(w[(t < s) & (s > r)].sum())
    minus = float(w[(t > s) & (s < r)].sum())
    return plus, minus


def osc_markov(model: MarkovModel, tol: float = 1e-12) -> float:
    """Markov oscillation ``Osc+ + Osc-``, the a.s. limit of LA_n / n."""
    plus, minus = osc_plus_minus(model)
    if abs(plus - minus) > tol:
        raise ArithmeticError(f"peak and trough rates differ: {plus!r} vs {minus!r}")
    return plus + minus


def y_process(seq) -> list[int]:
    """Gradient signs ``y_0 = +1``, ``y_k = sign(x_k - x_{k-1})`` or ``y_{k-1}`` on ties."""
    xs = as_sequence(seq).tolist()
    ys = [1]
    for prev, cur in zip(xs, xs[1:]):
        ys.append(1 if cur > prev else -1 if cur < prev else ys[-1])
    return ys


def las_via_y(seq) -> int:
    """LAS as one plus the number of sign flips of the gradient process."""
    ys = y_process(seq)
    return 1 + sum(a * b == -1 for a, b in zip(ys, ys[1:]))


def simulate_markov(model: MarkovModel, n: int, rng: np.random.Generator, chunk: int = 1 << 16) -> np.ndarray:
    """Draw ``x_0`` from the stationary law, then ``n`` transitions.

    Returns ``n + 1`` letters in ``1..q``. Uniforms are drawn from ``rng`` in
    blocks of ``chunk`` steps (the first block also supplies ``x_0``), so the
    output depends only on the generator state.
    """
    model.require_ergodic()
    q = model.q
    cdf = np.cumsum(model.P, axis=1)
    cdf[:, -1] = 1.0
    start_cdf = np.cumsum(model.pi)
    start_cdf[-1] = 1.0
    out = np.empty(n + 1, dtype=np.int64)
    x = int(np.searchsorted(start_cdf, rng.random(), side="right"))
    out[0] = x
    done = 0
    while done < n:
        m = min(chunk, n - done)
        u = rng.random(m)
        # jump[r][k]: target of state r on the k-th uniform of this block
        jump = [np.searchsorted(cdf[r], u, side="right").tolist() for r in range(q)]
        block = [0] * m
        for k in range(m):
            x = jump[x][k]
            block[k] = x
        out[done + 1:done + 1 + m] = block
        done += m
    return out + 1
