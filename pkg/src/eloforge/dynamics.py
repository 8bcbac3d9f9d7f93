"""Rating states, games with fractional pots, and transcript replay."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .potfn import PotFunction

ZERO_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Move:
    """``winner`` beats ``loser`` for a pot of size ``t`` in (0, 1]."""

    winner: int
    loser: int
    t: float = 1.0

    def __post_init__(self):
        if self.winner == self.loser:
            raise ValueError(f"winner and loser are both {self.winner}")
        if self.winner < 0 or self.loser < 0:
            raise ValueError("player indices must be >= 0")
        if not (0.0 < self.t <= 1.0):
            raise ValueError(f"pot fraction t={self.t!r} outside (0, 1]")


@dataclass(frozen=True)
class Permutation:
    """Relabelling edge of weight zero: ``new[k] = old[mapping[k]]``."""

    mapping: tuple

    def __post_init__(self):
        m = tuple(int(i) for i in self.mapping)
        if sorted(m) != list(range(len(m))):
            raise ValueError(f"not a permutation: {self.mapping!r}")
        object.__setattr__(self, "mapping", m)

    @classmethod
    def transposition(cls, n, i, j):
        m = list(range(n))
        m[i], m[j] = m[j], m[i]
        return cls(tuple(m))

    @property
    def is_identity(self):
        return all(i == k for k, i in enumerate(self.mapping))

    def then(self, other: "Permutation") -> "Permutation":
        """Composition: apply ``self`` first, then ``other``."""
        return Permutation(tuple(self.mapping[k] for k in other.mapping))


Edge = Union[Move, Permutation]


@dataclass(frozen=True)
class RatingState:
    """Ratings indexed by player; always zero-sum up to rounding."""

    ratings: tuple

    def __post_init__(self):
        r = tuple(float(x) for x in self.ratings)
        object.__setattr__(self, "ratings", r)
        scale = max([1.0] + [abs(x) for x in r])
        if abs(sum(r)) > ZERO_SUM_TOL * max(len(r), 1) * scale:
            raise ValueError(f"ratings are not zero-sum (sum={sum(r):.3g})")

    @classmethod
    def origin(cls, n: int) -> "RatingState":
        return cls((0.0,) * n)

    @property
    def n(self) -> int:
        return len(self.ratings)

    def __getitem__(self, i):
        return self.ratings[i]

    def __len__(self):
        return len(self.ratings)

    def as_array(self) -> np.ndarray:
        return np.array(self.ratings)

    @property
    def max(self) -> float:
        return max(self.ratings)

    def sorting_permutation(self) -> tuple:
        """Player indices by non-increasing rating (ties by index)."""
        return tuple(sorted(range(self.n), key=lambda i: (-self.ratings[i], i)))

    def sorted_desc(self) -> tuple:
        return tuple(sorted(self.ratings, reverse=True))

    def permuted(self, perm: Permutation) -> "RatingState":
        if len(perm.mapping) != self.n:
            raise ValueError("permutation size does not match the state")
        return RatingState(tuple(self.ratings[k] for k in perm.mapping))


def transfer(state, move: Move, sigma: PotFunction) -> float:
    """Points moving from loser to winner: sigma(r_loser - r_winner) * t."""
    r = state.ratings if isinstance(state, RatingState) else state
    return sigma.lower_scalar(r[move.winner] - r[move.loser]) * move.t


def apply_move(state: RatingState, move: Move, sigma: PotFunction) -> RatingState:
    n = state.n
    if move.winner >= n or move.loser >= n:
        raise ValueError(f"move {move} references a player outside 0..{n - 1}")
    x = transfer(state, move, sigma)
    r = list(state.ratings)
    r[move.winner] += x
    r[move.loser] -= x
    return RatingState(tuple(r))


def is_upset(state, move: Move) -> bool:
    """True when the winner was strictly lower rated before the game."""
    r = state.ratings if isinstance(state, RatingState) else state
    return r[move.winner] < r[move.loser]


@dataclass(frozen=True)
class Transcript:
    """Games from the origin, with optional relabellings between them.

    ``perms`` holds ``(after_move, Permutation)`` pairs: the relabelling is
    applied once ``after_move`` games have been played.
    """

    n: int
    moves: tuple = ()
    perms: tuple = ()
    sigma: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "moves", tuple(self.moves))
        perms = tuple((int(a), p if isinstance(p, Permutation) else Permutation(p))
                      for a, p in self.perms)
        for a, p in perms:
            if not 0 <= a <= len(self.moves):
                raise ValueError(f"permutation after move {a} is out of range")
            if len(p.mapping) != self.n:
                raise ValueError("permutation size does not match n")
        object.__setattr__(self, "perms", tuple(sorted(perms, key=lambda ap: ap[0])))

    @property
    def length(self) -> float:
        """Weighted length: total pot played."""
        return float(sum(m.t for m in self.moves))

    def edges(self) -> list:
        out = []
        pi = 0
        for k in range(len(self.moves) + 1):
            while pi < len(self.perms) and self.perms[pi][0] == k:
                out.append(self.perms[pi][1])
                pi += 1
            if k < len(self.moves):
                out.append(self.moves[k])
        return out

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge], sigma: str | None = None) -> "Transcript":
        moves, perms = [], []
        for e in edges:
            if isinstance(e, Permutation):
                perms.append((len(moves), e))
            else:
                moves.append(e)
        return cls(n, tuple(moves), tuple(perms), sigma)

    # --- JSON -----------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "sigma": self.sigma,
            "moves": [{"w": m.winner, "l": m.loser, "t": repr(float(m.t))} for m in self.moves],
            "perms": [{"after_move": a, "mapping": list(p.mapping)} for a, p in self.perms],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Transcript":
        try:
            n = int(d["n"])
            moves = tuple(Move(int(m["w"]), int(m["l"]), float(m.get("t", 1.0)))
                          for m in d.get("moves", []))
            perms = tuple((int(p["after_move"]), Permutation(tuple(p["mapping"])))
                          for p in d.get("perms", []))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed transcript: {exc!r}") from None
        for m in moves:
            if m.winner >= n or m.loser >= n:
                raise ValueError(f"move {m} references a player outside 0..{n - 1}")
        return cls(n, moves, perms, d.get("sigma"))

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed transcript JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ValueError("malformed transcript: top level must be an object")
        return cls.from_dict(d)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "Transcript":
        with open(path) as fh:
            return cls.from_json(fh.read())


@dataclass
class Replay:
    final: RatingState
    states: list = field(default_factory=list)  # state after each edge
    length: float = 0.0


def replay(transcript: Transcript, sigma: PotFunction) -> Replay:
    """Replay from the origin; errors name the offending move index."""
    state = RatingState.origin(transcript.n)
    states = []
    k = 0
    for e in transcript.edges():
        if isinstance(e, Permutation):
            state = state.permuted(e)
        else:
            try:
                state = apply_move(state, e, sigma)
            except ValueError as exc:
                raise ValueError(f"move {k}: {exc}") from None
            k += 1
        states.append(state)
    return Replay(state, states, transcript.length)


def replay_edges(ratings: Sequence[float], edges: Iterable[Edge], sigma: PotFunction) -> list:
    """Fast replay on a plain list of ratings (no zero-sum check)."""
    r = list(ratings)
    low = sigma.lower_scalar
    for e in edges:
        if isinstance(e, Permutation):
            r = [r[k] for k in e.mapping]
        else:
            x = low(r[e.winner] - r[e.loser]) * e.t
            r[e.winner] += x
            r[e.loser] -= x
    return r
