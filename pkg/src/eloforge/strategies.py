"""Constructive strategies: repeated wins between two players, and the ladder."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import Move, RatingState, Transcript
from .potfn import PotFunction

# (2^-1/3 + 2^2/3) / 9^1/3 rounded down, as used for the stated guarantee
LADDER_FACTOR = 1.14


def repeat_win(sigma: PotFunction, k: int, record: bool = True):
    """Player 0 beats player 1 ``k`` times from the origin.

    Returns ``(rating of player 0, Transcript)``; the transcript is None when
    ``record`` is false.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    low = sigma.lower_scalar
    r = 0.0
    for _ in range(k):
        r += low(2.0 * r)
    transcript = None
    if record:
        transcript = Transcript(2, (Move(0, 1, 1.0),) * k, (), sigma.name)
    return r, transcript


def repeat_win_checkpoints(sigma: PotFunction, ks) -> dict:
    """Repeated-win ratings at several game counts from a single trajectory."""
    ks = sorted(set(int(k) for k in ks))
    if ks and ks[0] < 0:
        raise ValueError("game counts must be >= 0")
    low = sigma.lower_scalar
    out = {}
    r = 0.0
    done = 0
    for k in ks:
        for _ in range(k - done):
            r += low(2.0 * r)
        done = k
        out[k] = r
    return out


def ladder_guarantee(sigma: PotFunction, k: int, threshold: float | None = None) -> float:
    """Lower bound 1.14 * c * k^(1/3) - A on the ladder's top rating."""
    a, rate = _threshold_and_rate(sigma, threshold)
    return LADDER_FACTOR * rate * k ** (1.0 / 3.0) - a


def ladder_player_bound(sigma: PotFunction, k: int, threshold: float | None = None) -> float:
    a, rate = _threshold_and_rate(sigma, threshold)
    return 2.0 * LADDER_FACTOR * rate * k ** (1.0 / 3.0) / a


def _threshold_and_rate(sigma, threshold):
    if threshold is None:
        a = sigma.threshold
        if a is None:
            raise ValueError(
                f"{sigma.name}: sigma(-z) z^2 has no maximiser; use repeat_win instead")
    else:
        a = float(threshold)
        if not a > 0:
            raise ValueError("threshold must be positive")
    rate = (sigma.lower_scalar(a) * a * a) ** (1.0 / 3.0)
    return a, rate


def phi_k(ratings, n_k: int) -> float:
    """Ladder potential: sum over the first n_k players of (2 n_k - 2i + 1) r_i."""
    r = ratings.ratings if isinstance(ratings, RatingState) else ratings
    if n_k > len(r):
        raise ValueError("n_k exceeds the number of players")
    return float(sum((2 * n_k - 2 * j - 1) * r[j] for j in range(n_k)))


def phi_k_telescoped(ratings, n_k: int) -> float:
    """Same potential written as n_k^2 r_1 + sum (n_k - i)^2 (r_{i+1} - r_i)."""
    r = ratings.ratings if isinstance(ratings, RatingState) else ratings
    if n_k == 0:
        return 0.0
    total = n_k * n_k * r[0]
    for j in range(n_k - 1):
        total += (n_k - j - 1) ** 2 * (r[j + 1] - r[j])
    return float(total)


def _inequality(name, lhs, rhs) -> dict:
    margin = float(rhs - lhs)
    return {"name": name, "lhs": float(lhs), "rhs": float(rhs), "margin": margin,
            "holds": margin >= 0}


@dataclass
class LadderRun:
    """Result of the ladder strategy together with its certificate data.

    ``n_k`` follows the convention that players ``0..n_k`` (``n_k + 1`` of
    them) played at least once.  ``certificate_state`` is the state just before
    player ``n_k`` played for the first time.  The ``*_at_stop`` fields record
    the first moment the top rating exceeded the guarantee.
    """

    k: int
    threshold: float
    rate: float
    final_state: RatingState
    n_k: int
    certificate_state: tuple
    certificate_game: int
    guarantee: float
    stop_game: int | None
    r1_at_stop: float | None
    players_at_stop: int | None
    stopped_early: bool
    threshold_stake: float
    winners: np.ndarray = field(repr=False)

    @property
    def r1(self) -> float:
        return self.final_state.ratings[0]

    @property
    def players_used(self) -> int:
        return self.n_k + 1

    @property
    def phi_k(self) -> float:
        return phi_k(self.final_state, self.n_k)

    @property
    def player_bound(self) -> float:
        return 2.0 * LADDER_FACTOR * self.rate * self.k ** (1.0 / 3.0) / self.threshold

    def certificate(self) -> list:
        """Each ladder inequality as ``{name, lhs, rhs, margin, holds}`` (holds iff lhs <= rhs)."""
        a = self.threshold
        cert = self.certificate_state
        gaps = [cert[i] - cert[i + 1] for i in range(self.n_k - 1)]
        rows = [
            ("diff_sandwich", a, min(gaps) if gaps else float("inf")),
            ("phi_sandwich", 2.0 * self.threshold_stake * self.k, self.phi_k),
            ("r1_estimate_one", 0.5 * a * (self.n_k - 1), self.r1),
            ("r1_final_lb", self.guarantee, self.r1),
        ]
        return [_inequality(*row) for row in rows]

    def player_check(self) -> dict | None:
        """Players in use when the top rating first exceeds the guarantee, against the bound.

        None when the guarantee was never exceeded.  For tiny k the guarantee is
        not positive and the check is vacuous, so it can fail there.
        """
        if self.players_at_stop is None:
            return None
        return _inequality("players_at_stop", float(self.players_at_stop), self.player_bound)

    def transcript(self, sigma_name: str | None = None) -> Transcript:
        moves = tuple(Move(int(i), int(i) + 1, 1.0) for i in self.winners)
        return Transcript(self.n_k + 1, moves, (), sigma_name)


def ladder(sigma: PotFunction, k: int, threshold: float | None = None,
           stop_early: bool = False, naive: bool = False) -> LadderRun:
    """Run the ladder strategy for exactly ``k`` games.

    Each game, the lowest-indexed player ``i`` with ``r_i < r_{i+1} + A`` beats
    player ``i + 1``.  With ``stop_early`` the ladder halts once the top rating
    exceeds the guarantee and the remaining games are player 0 beating player 1,
    which brings in no new players.  ``naive`` rescans from player 0 every game
    instead of resuming from ``i - 1`` (identical output, used as a check).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    a, rate = _threshold_and_rate(sigma, threshold)
    guarantee = LADDER_FACTOR * rate * k ** (1.0 / 3.0) - a
    low = sigma.lower_scalar
    r = [0.0, 0.0]
    winners = np.empty(k, dtype=np.int64)
    top = 1  # largest index that has played, or 1 before any game
    cert, cert_game = (0.0, 0.0), 0
    stop_game = r1_stop = players_stop = None
    halted = False
    i = 0
    for g in range(k):
        if stop_game is None and r[0] > guarantee:
            stop_game, r1_stop, players_stop = g, r[0], top + 1
            halted = stop_early
        if halted:
            i = 0
        else:
            if naive:
                i = 0
            while True:
                if i + 1 >= len(r):
                    r.append(0.0)
                if r[i] < r[i + 1] + a:
                    break
                i += 1
        if i + 1 > top or g == 0:
            top = max(top, i + 1)
            cert, cert_game = tuple(r), g
        x = low(r[i] - r[i + 1])
        r[i] += x
        r[i + 1] -= x
        winners[g] = i
        if not halted and i > 0:
            i -= 1
    n_k = top if k > 0 else 0
    final = tuple(r[: n_k + 1]) if k > 0 else (0.0, 0.0)
    run = LadderRun(
        k=k, threshold=a, rate=rate, final_state=RatingState(final), n_k=n_k,
        certificate_state=cert[: n_k + 1], certificate_game=cert_game,
        guarantee=guarantee, stop_game=stop_game, r1_at_stop=r1_stop,
        players_at_stop=players_stop, stopped_early=halted,
        threshold_stake=low(a), winners=winners,
    )
    return run
