"""Exact optimum of the top rating for tiny player and game counts.

Depth-first search over unit-pot games in lexicographic (winner, loser)
order.  With symmetry reduction each state is kept sorted in non-increasing
order and sibling moves that lead to the same sorted state are explored once.

Pruning uses one of two admissible bounds on the final top rating:

``unit``
    current top + remaining games, since a single game moves less than one
    point;
``opt``
    current top + the exact optimum for the remaining games from the origin.
    The game map is coordinatewise monotone whenever sigma' <= 1, and the
    dynamics only see rating differences, so any state played forward gains
    at most what the origin gains.  Falls back to ``unit`` otherwise.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass, field

from .bounds import rating_cap, two_player_interval
from .dynamics import Move, Transcript, replay
from .potfn import PotFunction
from .strategies import ladder, repeat_win
from .tails import TailIntegrals

MAX_PLAYERS = 6
MAX_GAMES = 12
PRUNE_SLACK = 1e-9


@dataclass(frozen=True)
class SearchProblem:
    sigma: PotFunction
    n: int
    k: int

    def __post_init__(self):
        if not 2 <= self.n <= MAX_PLAYERS:
            raise ValueError(f"n={self.n} outside 2..{MAX_PLAYERS}")
        if not 0 <= self.k <= MAX_GAMES:
            raise ValueError(f"k={self.k} outside 0..{MAX_GAMES}")


@dataclass
class SearchResult:
    best_value: float
    best_transcript: Transcript
    nodes_expanded: int
    pruned: int
    symmetry: bool
    prune: str


class _Solver:
    def __init__(self, problem: SearchProblem, symmetry: bool, prune: str, opt: list):
        self.low = problem.sigma.lower_scalar
        self.n = problem.n
        self.k = problem.k
        self.symmetry = symmetry
        self.prune = prune
        self.opt = opt  # opt[m] = optimum for m games from the origin
        self.pairs = [(w, l) for w in range(self.n) for l in range(self.n) if w != l]
        self.best = float("-inf")
        self.best_moves = ()
        self.nodes = 0
        self.pruned = 0

    def bound(self, top, remaining):
        if self.prune == "opt":
            # the root needs the value being computed; nothing to prune there
            return top + self.opt[remaining] if remaining < len(self.opt) else float("inf")
        if self.prune == "unit":
            return top + remaining
        return float("inf")

    def _child(self, r, w, l):
        s = list(r)
        x = self.low(s[w] - s[l])
        s[w] += x
        s[l] -= x
        return s

    def run(self):
        r = [0.0] * self.n
        self._dfs(r, list(range(self.n)), [], self.k)
        return self

    def _dfs(self, r, labels, path, remaining):
        if remaining == 0:
            v = max(r)
            if v > self.best:
                self.best, self.best_moves = v, tuple(path)
            return
        if self.bound(max(r), remaining) + PRUNE_SLACK < self.best:
            self.pruned += 1
            return
        self.nodes += 1
        if not self.symmetry:
            for w, l in self.pairs:
                path.append((w, l))
                self._dfs(self._child(r, w, l), labels, path, remaining - 1)
                path.pop()
            return
        seen = set()
        for w, l in self.pairs:
            s = self._child(r, w, l)
            order = sorted(range(self.n), key=lambda i: (-s[i], i))
            key = tuple(s[i] for i in order)
            if key in seen:
                continue
            seen.add(key)
            path.append((labels[w], labels[l]))
            self._dfs(list(key), [labels[i] for i in order], path, remaining - 1)
            path.pop()


_OPT_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _opt_table(sigma: PotFunction, n: int, k: int, symmetry: bool) -> list:
    table = _OPT_CACHE.setdefault(sigma, {}).setdefault((n, symmetry), [0.0])
    while len(table) < k:
        m = len(table)
        s = _Solver(SearchProblem(sigma, n, m), symmetry, "opt", table).run()
        table.append(s.best)
    return table


def solve(problem: SearchProblem, symmetry: bool = True, prune: str = "auto") -> SearchResult:
    """Best achievable top rating after exactly ``k`` unit games among ``n`` players.

    ``prune`` is ``"auto"`` (``opt`` when sigma' <= 1, else ``unit``),
    ``"opt"``, ``"unit"`` or ``"none"``.  Ties keep the first transcript found,
    i.e. the lexicographically smallest among those explored.
    """
    sigma = problem.sigma
    if prune == "auto":
        prune = "opt" if sigma.max_slope <= 1.0 else "unit"
    if prune == "opt" and sigma.max_slope > 1.0:
        raise ValueError(f"{sigma.name}: slope {sigma.max_slope:g} > 1, the opt bound is not valid")
    if prune not in ("opt", "unit", "none"):
        raise ValueError(f"unknown prune mode {prune!r}")
    opt = _opt_table(sigma, problem.n, problem.k, symmetry) if prune == "opt" else []
    s = _Solver(problem, symmetry, prune, opt).run()
    moves = tuple(Move(w, l, 1.0) for w, l in s.best_moves)
    transcript = Transcript(problem.n, moves, (), sigma.name)
    return SearchResult(s.best, transcript, s.nodes, s.pruned, symmetry, prune)


@dataclass
class Comparison:
    n: int
    k: int
    optimum: float
    replayed: float
    repeat_win: float
    ladder: float | None
    two_player_interval: tuple | None
    rating_cap: float
    violations: list = field(default_factory=list)

    def rows(self) -> list:
        out = [("optimum", self.optimum), ("replayed", self.replayed),
               ("repeat_win", self.repeat_win), ("ladder", self.ladder),
               ("rating_cap", self.rating_cap)]
        if self.two_player_interval is not None:
            out += [("two_player_low", self.two_player_interval[0]),
                    ("two_player_high", self.two_player_interval[1])]
        return out


def compare(problem: SearchProblem, tails: TailIntegrals | None = None,
            result: SearchResult | None = None) -> Comparison:
    """Check the optimum against the strategies and the proved bounds."""
    sigma = problem.sigma
    if tails is None:
        tails = TailIntegrals(sigma)
    if result is None:
        result = solve(problem)
    best = result.best_value
    replayed = replay(result.best_transcript, sigma).final.max if problem.k else 0.0
    rw, _ = repeat_win(sigma, problem.k, record=False)
    lad = None
    if sigma.threshold is not None and problem.k > 0:
        run = ladder(sigma, problem.k)
        if run.players_used <= problem.n:
            lad = run.r1
    interval = two_player_interval(tails, problem.k) if problem.n == 2 else None
    cap = rating_cap(problem.k, tails)
    bad = []
    if abs(replayed - best) > 1e-9:
        bad.append(f"replayed transcript gives {replayed!r}, search reported {best!r}")
    if best < rw - 1e-12:
        bad.append(f"optimum {best:.12g} below repeated wins {rw:.12g}")
    if lad is not None and best < lad - 1e-12:
        bad.append(f"optimum {best:.12g} below ladder {lad:.12g}")
    if best > cap:
        bad.append(f"optimum {best:.12g} above rating cap {cap:.12g}")
    if interval is not None and not interval[0] <= best <= interval[1]:
        bad.append(f"optimum {best:.12g} outside two-player interval {interval}")
    return Comparison(problem.n, problem.k, best, replayed, rw, lad, interval, cap, bad)
