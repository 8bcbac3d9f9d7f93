"""Rewriting arbitrary game paths into upset-free ones.

A path is a start state, a list of games with fractional pots, and one
relabelling applied at the very end.  Relabellings cost nothing, so every
relabelling met along the way is pushed to the end by renaming the players of
the games after it.

The rewrite has three phases:

1. every upset in which the winner overtakes the loser is replaced by a
   smaller game (same or reversed direction) followed by a swap of the two
   labels;
2. an upset immediately followed by a non-upset is rewritten into edges with
   the same combined transfer, which moves upsets towards the end;
3. trailing upsets are dropped, which can only raise the top rating.

Rewrites are expressed as transfers ("player w takes x points from player l")
and converted back to pot fractions at the state where each edge starts, so
endpoints are preserved up to rounding.  Transfers that would need a pot above
one are split into unit games plus a remainder.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Move, Permutation, RatingState, Transcript, replay_edges
from .potfn import PotFunction
from .tails import TailIntegrals

MIN_POT = 1e-15
MAX_REWRITES = 10 ** 6
MAX_PIECES = 10 ** 5
REWRITE_TOL = 1e-9

STEP_NAMES = (
    "perm_push", "swap_exact", "swap_partial", "swap_full",
    "commute_disjoint", "commute_shared", "commute_chain_keep", "commute_chain_drop",
    "commute_reverse", "commute_merge", "split_pieces", "strip",
)


class RewriteLimitError(RuntimeError):
    """Raised when the rewrite does not reach a fixpoint within the cap."""

    def __init__(self, message, path):
        super().__init__(message)
        self.path = path


@dataclass(frozen=True)
class Path:
    """Games from ``start``, then the relabelling ``perm``."""

    start: tuple
    moves: tuple
    perm: Permutation

    @property
    def n(self) -> int:
        return len(self.start)

    @property
    def length(self) -> float:
        return float(sum(m.t for m in self.moves))

    @classmethod
    def from_transcript(cls, transcript: Transcript, stats: dict | None = None) -> "Path":
        n = transcript.n
        q = Permutation(tuple(range(n)))
        moves = []
        for e in transcript.edges():
            if isinstance(e, Permutation):
                q = q.then(e)
                if stats is not None and not e.is_identity:
                    stats["perm_push"] = stats.get("perm_push", 0) + 1
            else:
                m = q.mapping
                moves.append(Move(m[e.winner], m[e.loser], e.t))
        return cls((0.0,) * n, tuple(moves), q)

    def to_transcript(self, sigma_name: str | None = None) -> Transcript:
        if any(x != 0.0 for x in self.start):
            raise ValueError("only paths from the origin convert to transcripts")
        perms = () if self.perm.is_identity else ((len(self.moves), self.perm),)
        return Transcript(self.n, self.moves, perms, sigma_name)

    def states(self, sigma: PotFunction) -> list:
        """State before each game, then the state after the last game (before relabelling)."""
        low = sigma.lower_scalar
        r = list(self.start)
        out = [tuple(r)]
        for m in self.moves:
            x = low(r[m.winner] - r[m.loser]) * m.t
            r[m.winner] += x
            r[m.loser] -= x
            out.append(tuple(r))
        return out

    def endpoint(self, sigma: PotFunction) -> np.ndarray:
        r = replay_edges(self.start, self.moves, sigma)
        return np.array([r[k] for k in self.perm.mapping])

    def upsets(self, sigma: PotFunction) -> int:
        st = self.states(sigma)
        return sum(1 for m, r in zip(self.moves, st) if r[m.winner] < r[m.loser])


@dataclass
class RewriteReport:
    original_len: float
    rewritten_len: float
    continuous_len: float
    endpoint_error: float
    max_rewrite_error: float
    steps_applied: dict
    upsets: int
    final_max: float
    target: float
    cost_constant: float
    continuous_increases: int = 0
    max_continuous_increase: float = 0.0

    @property
    def ratio(self) -> float:
        if self.original_len == 0.0:
            return 1.0 if self.rewritten_len == 0.0 else float("inf")
        return self.rewritten_len / self.original_len

    @property
    def in_target(self) -> bool:
        return self.final_max >= self.target

    @property
    def certified(self) -> bool:
        return (self.upsets == 0 and self.in_target and self.endpoint_error <= 1e-7
                and self.ratio <= self.cost_constant and self.max_rewrite_error <= REWRITE_TOL)

    def to_dict(self) -> dict:
        return {
            "original_len": self.original_len,
            "rewritten_len": self.rewritten_len,
            "continuous_len": self.continuous_len,
            "ratio": self.ratio,
            "cost_constant": self.cost_constant,
            "endpoint_error": self.endpoint_error,
            "max_rewrite_error": self.max_rewrite_error,
            "upsets": self.upsets,
            "final_max": self.final_max,
            "target": self.target,
            "in_target": self.in_target,
            "continuous_increases": self.continuous_increases,
            "max_continuous_increase": self.max_continuous_increase,
            "steps_applied": dict(sorted(self.steps_applied.items())),
            "certified": self.certified,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"


# --- costs ------------------------------------------------------------------------

def continuous_cost(state, move: Move, tails: TailIntegrals) -> float:
    """Integral of 1/sigma(-tau) from z to z + 2 sigma(-z) t, with z the winner's lead."""
    r = state.ratings if isinstance(state, RatingState) else state
    z = r[move.winner] - r[move.loser]
    if z < 0:
        raise ValueError(f"continuous cost is defined for non-upsets only (lead {z:g})")
    return tails.integral_span(z, 2.0 * tails.sigma.lower_scalar(z) * move.t)


def continuous_length(path: Path, tails: TailIntegrals) -> float:
    total = 0.0
    for m, r in zip(path.moves, path.states(tails.sigma)):
        if r[m.winner] >= r[m.loser]:
            total += continuous_cost(r, m, tails)
    return total


# --- rewriting engine --------------------------------------------------------------------

def _play(r, w, l, t, low):
    x = low(r[w] - r[l]) * t
    r[w] += x
    r[l] -= x


def _max_diff(a, b) -> float:
    return max(abs(x - y) for x, y in zip(a, b)) if len(a) else 0.0


class _Rewriter:
    """Cursor scan shared by the public rewrite functions.

    Moves are kept as ``[w, l, t]`` triples; ``states[i]`` is the state before
    move ``i`` and is valid for ``i <= pos``.  After a rewrite at ``pos`` the
    cursor steps back one place, since the new first edge may pair with the
    edge before it.
    """

    def __init__(self, path: Path, sigma: PotFunction, tails: TailIntegrals | None,
                 stats: dict, max_rewrites: int):
        self.sigma = sigma
        self.low = sigma.lower_scalar
        self.tails = tails
        self.moves = [(m.winner, m.loser, m.t) for m in path.moves]
        self.perm = list(path.perm.mapping)
        self.start = tuple(path.start)
        self.stats = stats
        self.max_rewrites = max_rewrites
        self.rewrites = 0
        self.max_error = stats.get("_max_error", 0.0)
        self.cont_increases = 0
        self.max_cont_increase = 0.0

    def path(self) -> Path:
        return Path(self.start, tuple(Move(w, l, t) for w, l, t in self.moves),
                    Permutation(tuple(self.perm)))

    def _count(self, key, k=1):
        self.stats[key] = self.stats.get(key, 0) + k

    def _tick(self):
        self.rewrites += 1
        if self.rewrites > self.max_rewrites:
            raise RewriteLimitError(
                f"no fixpoint after {self.max_rewrites} rewrites", self.path())

    def _emit(self, r, w, l, amount) -> list:
        """Edges in direction w-beats-l transferring ``amount`` in total from ``r``."""
        out = []
        s = list(r)
        for _ in range(MAX_PIECES):
            if amount <= 0.0:
                return out
            cap = self.low(s[w] - s[l])
            if amount <= cap:
                t = amount / cap
                if t >= MIN_POT:
                    out.append((w, l, t))
                return out
            out.append((w, l, 1.0))
            s[w] += cap
            s[l] -= cap
            amount -= cap
            self._count("split_pieces")
        raise RuntimeError(f"transfer of {amount:g} needs more than {MAX_PIECES} unit games")

    def _check(self, expected, r, new, perm=None):
        s = list(r)
        for w, l, t in new:
            _play(s, w, l, t, self.low)
        if perm is not None:
            s = [s[k] for k in perm]
        err = _max_diff(expected, s)
        self.max_error = max(self.max_error, err)
        self.stats["_max_error"] = self.max_error

    def _cont(self, r, edges) -> float:
        if self.tails is None:
            return 0.0
        s = list(r)
        total = 0.0
        for w, l, t in edges:
            z = s[w] - s[l]
            d = self.low(z) * t
            if z >= 0:
                total += self.tails.integral_span(z, 2.0 * d)
            s[w] += d
            s[l] -= d
        return total

    # --- rules ----------------------------------------------------------------

    def swap_step(self, pos, r) -> bool:
        """Replace a rank-swapping upset at ``pos``; returns False if it is not one."""
        w, l, t = self.moves[pos]
        gap = r[l] - r[w]
        if gap <= 0:
            return False
        d = self.low(-gap) * t
        if 2.0 * d <= gap:
            return False
        expected = list(r)
        expected[w] += d
        expected[l] -= d
        if abs(d - gap) <= 1e-15 * max(1.0, gap):
            new = []
            self._count("swap_exact")
        elif d < gap:
            new = self._emit(r, w, l, gap - d)
            self._count("swap_partial")
        else:
            new = self._emit(r, l, w, d - gap)
            self._count("swap_full")
        for _, _, tn in new:
            if not 0.0 < tn <= t * (1.0 + 1e-12):
                raise RuntimeError(f"swap rewrite produced pot {tn!r} outside (0, {t!r}]")
        tau = list(range(len(r)))
        tau[w], tau[l] = l, w
        self._check(expected, r, new, tau)
        rest = [(tau[a], tau[b], tt) for a, b, tt in self.moves[pos + 1:]]
        self.moves[pos:] = new + rest
        self.perm = [tau[k] for k in self.perm]
        self._tick()
        return True

    def commute_step(self, pos, r, r1) -> bool:
        """Rewrite the pair (upset at ``pos``, non-upset at ``pos + 1``)."""
        (w1, l1, t1), (w2, l2, t2) = self.moves[pos], self.moves[pos + 1]
        if r1[w2] < r1[l2]:
            return False
        du = self.low(r[w1] - r[l1]) * t1
        dv = self.low(r1[w2] - r1[l2]) * t2
        expected = list(r1)
        expected[w2] += dv
        expected[l2] -= dv
        inner = (w1 == w2) + (l1 == l2) - (w1 == l2) - (l1 == w2)
        if inner == 0:
            new = [(w2, l2, t2), (w1, l1, t1)]
            self._count("commute_disjoint")
        elif inner == 1:
            first = self._emit(r, w2, l2, dv)
            s = self._after(r, first)
            new = first + self._emit(s, w1, l1, du)
            self._count("commute_shared")
        elif inner == -1:
            # u + v runs from the winner of one game to the loser of the other
            cw, cl = (w1, l2) if l1 == w2 else (w2, l1)
            if du >= dv:
                first = self._emit(r, cw, cl, dv)
                new = first + self._emit(self._after(r, first), w1, l1, du - dv)
                self._count("commute_chain_keep")
            else:
                first = self._emit(r, cw, cl, du)
                new = first + self._emit(self._after(r, first), w2, l2, dv - du)
                self._count("commute_chain_drop")
        elif inner == -2:
            new = self._emit(r, w1, l1, du - dv) if du >= dv else self._emit(r, w2, l2, dv - du)
            self._count("commute_reverse")
        else:
            new = self._emit(r, w1, l1, du + dv)
            self._count("commute_merge")
        if self.tails is not None:
            before = self._cont(r, self.moves[pos:pos + 2])
            after = self._cont(r, new)
            if after > before + 1e-12 * max(1.0, before):
                self.cont_increases += 1
                self.max_cont_increase = max(self.max_cont_increase, after - before)
        self._check(expected, r, new)
        self.moves[pos:pos + 2] = new
        self._tick()
        return True

    def _after(self, r, edges):
        s = list(r)
        for w, l, t in edges:
            _play(s, w, l, t, self.low)
        return s

    # --- drivers ---------------------------------------------------------------------

    def run(self, commute: bool):
        states = [list(self.start)]
        pos = 0
        while pos < len(self.moves):
            r = states[pos]
            w, l, t = self.moves[pos]
            changed = False
            if r[w] < r[l]:
                changed = self.swap_step(pos, r)
                if not changed and commute and pos + 1 < len(self.moves):
                    r1 = self._after(r, [self.moves[pos]])
                    changed = self.commute_step(pos, r, r1)
            if changed:
                if commute:
                    pos = max(pos - 1, 0)
                del states[pos + 1:]
                continue
            s = list(r)
            _play(s, w, l, t, self.low)
            states.append(s)
            pos += 1
        return self.path()


def _find_rank_swap(path: Path, sigma: PotFunction):
    low = sigma.lower_scalar
    for i, (m, r) in enumerate(zip(path.moves, path.states(sigma))):
        gap = r[m.loser] - r[m.winner]
        if gap > 0 and 2.0 * low(-gap) * m.t > gap:
            return i
    return None


def remove_rank_swaps(path: Path, sigma: PotFunction, stats: dict | None = None) -> Path:
    """One pass replacing every upset in which the winner ends above the loser."""
    stats = {} if stats is None else stats
    return _Rewriter(path, sigma, None, stats, MAX_REWRITES).run(commute=False)


def commute_upsets_right(path: Path, sigma: PotFunction, stats: dict | None = None,
                         tails: TailIntegrals | None = None,
                         max_rewrites: int = MAX_REWRITES) -> Path:
    """Rewrite until every upset comes after every non-upset.

    The input must be free of rank-swapping upsets; ones created by the
    rewrites themselves are removed as they appear.
    """
    i = _find_rank_swap(path, sigma)
    if i is not None:
        raise ValueError(f"move {i} is a rank-swapping upset; remove those first")
    stats = {} if stats is None else stats
    rw = _Rewriter(path, sigma, tails, stats, max_rewrites)
    out = rw.run(commute=True)
    stats["_continuous_increases"] = stats.get("_continuous_increases", 0) + rw.cont_increases
    stats["_max_continuous_increase"] = max(stats.get("_max_continuous_increase", 0.0),
                                            rw.max_cont_increase)
    return out


def strip_trailing_upsets(path: Path, R: float, sigma: PotFunction,
                          stats: dict | None = None) -> Path:
    """Drop the upsets at the end of the path; the top rating can only go up."""
    st = path.states(sigma)
    moves = list(path.moves)
    k = len(moves)
    while k and st[k - 1][moves[k - 1].winner] < st[k - 1][moves[k - 1].loser]:
        k -= 1
    if any(r[m.winner] < r[m.loser] for m, r in zip(moves[:k], st)):
        raise ValueError("an upset precedes a non-upset; commute the upsets first")
    top = max(st[k])
    if top < R:
        raise ValueError(f"path without its trailing upsets tops out at {top:g} < R={R:g}")
    if stats is not None:
        stats["strip"] = stats.get("strip", 0) + len(moves) - k
    return Path(path.start, tuple(moves[:k]), path.perm)


def make_upset_free(path, R: float, sigma: PotFunction, tails: TailIntegrals | None = None,
                    max_rewrites: int = MAX_REWRITES):
    """Full rewrite of a path ending at a state with some rating >= ``R``.

    Accepts a :class:`Path` or a :class:`Transcript` from the origin and returns
    ``(upset-free Path, RewriteReport)``.
    """
    if tails is None:
        tails = TailIntegrals(sigma)
    stats = {name: 0 for name in STEP_NAMES}
    if isinstance(path, Transcript):
        path = Path.from_transcript(path, stats)
    target = path.endpoint(sigma)
    if target.max() < R:
        raise ValueError(f"path ends with top rating {target.max():g} < R={R:g}")
    p1 = remove_rank_swaps(path, sigma, stats)
    p2 = commute_upsets_right(p1, sigma, stats, tails, max_rewrites)
    endpoint_error = float(np.max(np.abs(p2.endpoint(sigma) - target))) if len(target) else 0.0
    p3 = strip_trailing_upsets(p2, R, sigma, stats)
    final = p3.endpoint(sigma)
    report = RewriteReport(
        original_len=path.length,
        rewritten_len=p3.length,
        continuous_len=continuous_length(p3, tails),
        endpoint_error=endpoint_error,
        max_rewrite_error=stats.pop("_max_error", 0.0),
        steps_applied=stats,
        upsets=p3.upsets(sigma),
        final_max=float(final.max()),
        target=R,
        cost_constant=sigma.cost_constant,
        continuous_increases=stats.pop("_continuous_increases", 0),
        max_continuous_increase=stats.pop("_max_continuous_increase", 0.0),
    )
    return p3, report


def random_path(rng: np.random.Generator, sigma: PotFunction, n: int, length: int,
                R: float = 1.0, upset_bias: float = 0.5, max_extra: int = 10_000) -> Transcript:
    """Random transcript mixing upsets and non-upsets, extended until some rating >= R.

    Each game picks a random pair and a random pot; with probability
    ``upset_bias`` the lower-rated player wins.  Once ``length`` games are
    played, the current leader keeps beating the next player until the target
    is reached.
    """
    if n < 2:
        raise ValueError("need at least two players")
    low = sigma.lower_scalar
    r = [0.0] * n
    moves = []
    for _ in range(length):
        i, j = rng.choice(n, size=2, replace=False)
        i, j = int(i), int(j)
        upset = rng.random() < upset_bias
        if (r[i] < r[j]) != upset:
            i, j = j, i
        t = float(rng.uniform(0.05, 1.0))
        moves.append(Move(i, j, t))
        _play(r, i, j, t, low)
    for _ in range(max_extra):
        if max(r) >= R:
            break
        order = sorted(range(n), key=lambda k: (-r[k], k))
        i, j = order[0], order[1]
        moves.append(Move(i, j, 1.0))
        _play(r, i, j, 1.0, low)
    else:
        raise RuntimeError("random path did not reach the target")
    return Transcript(n, tuple(moves), (), sigma.name)
