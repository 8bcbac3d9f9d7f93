"""Closed-form rating bounds and the sorted-gap potential.

The potential of a state is ``||r||^2 + sum cumulative(gap)`` over the gaps
between consecutive ratings in non-increasing order.  It grows by at most a
constant per unit of pot along upset-free play, and it is large whenever some
rating is large; together these give a lower bound on the games needed to
reach a rating, and inverting that gives a rating cap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Move, RatingState
from .potfn import PotFunction
from .strategies import LADDER_FACTOR
from .tails import TailIntegrals

GROWTH_PROBE_TOP = 60.0
GROWTH_PROBE_STEP = 0.05
# per-sigma (a, x0): moment(x) >= (a x)^2 for x >= x0
GROWTH_DEFAULTS = {"logistic": (1.0, 2.0)}


# --- constants ---------------------------------------------------------------

def cost_constant(sigma: PotFunction) -> float:
    """Continuous cost per unit pot of a non-upset: 2 sup sigma(-z)/sigma(-z-2sigma(-z))."""
    return sigma.cost_constant


def phi_constant(sigma: PotFunction) -> float:
    """6 + 4 sup sigma(-z)/sigma(-z-2sigma(-z)) + 1/sigma(-1)."""
    return sigma.phi_constant


def games_constant(sigma: PotFunction) -> float:
    return 1.0 / (8.0 * sigma.cost_constant * sigma.phi_constant)


# --- potential -----------------------------------------------------------------

@dataclass(frozen=True)
class PhiValue:
    state: RatingState
    pi: tuple  # players by non-increasing rating
    value: float


def phi_value(ratings, tails: TailIntegrals) -> float:
    r = np.asarray(ratings, dtype=float)
    s = np.sort(r)[::-1]
    gaps = s[:-1] - s[1:]
    total = float(r @ r)
    if gaps.size:
        total += float(np.sum(tails.cumulative(gaps)))
    return total


def phi(state: RatingState, tails: TailIntegrals) -> PhiValue:
    """The sorted-gap potential together with the sorting permutation."""
    if state.n < 1:
        raise ValueError("need at least one player")
    return PhiValue(state, state.sorting_permutation(), phi_value(state.ratings, tails))


def phi_increase(ratings, move: Move, tails: TailIntegrals) -> float:
    """Change of the potential across one game."""
    r = np.asarray(ratings, dtype=float)
    after = r.copy()
    x = tails.sigma.lower_scalar(r[move.winner] - r[move.loser]) * move.t
    after[move.winner] += x
    after[move.loser] -= x
    return phi_value(after, tails) - phi_value(r, tails)


# --- bounds ------------------------------------------------------------------------

def two_player_estimate(tails: TailIntegrals, k: int) -> float:
    """Half the inverse cumulative at 2k: the repeated-win rating up to +-3."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return 0.5 * tails.cumulative_inv(2.0 * k)


def two_player_interval(tails: TailIntegrals, k: int) -> tuple:
    mid = two_player_estimate(tails, k)
    return mid - 3.0, mid + 3.0


def ladder_guarantee(sigma: PotFunction, k: int) -> float | None:
    a, rate = sigma.threshold, sigma.ladder_rate
    if a is None:
        return None
    return LADDER_FACTOR * rate * k ** (1.0 / 3.0) - a


def phi_lower_bound(R: float, tails: TailIntegrals) -> float:
    """R^3 / (8 moment_inv(R^2 / 4)): the potential of any state with a rating >= R."""
    if not R > 0:
        raise ValueError(f"R must be > 0, got {R}")
    return R ** 3 / (8.0 * tails.moment_inv(R * R / 4.0))


def games_lower_bound(R: float, tails: TailIntegrals, C: float | None = None) -> float:
    """C R^3 / moment_inv(R^2 / 4) games are needed to reach rating R."""
    if not R > 0:
        raise ValueError(f"R must be > 0, got {R}")
    if C is None:
        C = games_constant(tails.sigma)
    return C * R ** 3 / tails.moment_inv(R * R / 4.0)


def growth_probe(tails: TailIntegrals, a: float, x0: float) -> tuple:
    """Check moment(x) >= (a x)^2 on [x0, top]; returns ``(ok, first failing x)``."""
    top = min(GROWTH_PROBE_TOP, 0.99 * tails.x_max)
    if x0 > top:
        return False, x0
    x = np.arange(x0, top + 1e-12, GROWTH_PROBE_STEP)
    g = tails.moment(x)
    bad = g < (a * x) ** 2 * (1.0 - 1e-9)
    if bad.any():
        return False, float(x[np.flatnonzero(bad)[0]])
    return True, None


def default_growth(tails: TailIntegrals, a: float = 1.0) -> tuple:
    """Per-sigma (a, x0) for the growth premise, verified by probe."""
    sigma = tails.sigma
    if sigma.name in GROWTH_DEFAULTS:
        a, x0 = GROWTH_DEFAULTS[sigma.name]
    else:
        top = min(GROWTH_PROBE_TOP, 0.99 * tails.x_max)
        x = np.arange(0.0, top + 1e-12, GROWTH_PROBE_STEP)
        bad = tails.moment(x) < (a * x) ** 2 * (1.0 - 1e-9)
        if bad.all():
            raise ValueError(f"{sigma.name}: moment(x) >= ({a} x)^2 fails on the probe range")
        x0 = float(x[np.flatnonzero(bad)[-1] + 1]) if bad.any() else 0.0
    ok, where = growth_probe(tails, a, x0)
    if not ok:
        raise ValueError(f"{sigma.name}: growth premise fails at x={where}")
    return a, x0


def rating_cap(k: float, tails: TailIntegrals, C: float | None = None,
               a: float | None = None, x0: float | None = None) -> float:
    """Largest rating reachable with k games: C^-1/3 k^1/3 moment_inv(k / (8 a C))^1/3."""
    if C is None:
        C = games_constant(tails.sigma)
    if not C > 0:
        raise ValueError("C must be positive")
    if a is None:
        a, x0 = default_growth(tails)
    else:
        if not a > 0:
            raise ValueError("a must be positive")
        ok, where = growth_probe(tails, a, 0.0 if x0 is None else x0)
        if not ok:
            raise ValueError(f"growth premise moment(x) >= ({a} x)^2 fails at x={where}")
    if k <= 0:
        return 0.0
    return C ** (-1.0 / 3.0) * k ** (1.0 / 3.0) * tails.moment_inv(k / (8.0 * a * C)) ** (1.0 / 3.0)


# --- table of asymptotic forms ------------------------------------------------------

def two_player_closed_form(sigma: PotFunction, k: float) -> float:
    if sigma.kind == "logistic":
        return 0.5 * math.log(k)
    if sigma.kind == "erf":
        return 0.5 * math.sqrt(math.log(k))
    if sigma.kind == "algebraic":
        p = sigma.params["p"]
        return 0.5 * (1.0 + 1.0 / p) ** (1.0 / (p + 1.0)) * k ** (1.0 / (1.0 + p))
    raise ValueError(f"no closed form for {sigma.name}")


def many_player_form(sigma: PotFunction, k: float) -> float:
    """The rating-cap growth form, without constants."""
    if sigma.kind == "logistic":
        return k ** (1.0 / 3.0) * math.log(k) ** (1.0 / 3.0)
    if sigma.kind == "erf":
        return k ** (1.0 / 3.0) * math.log(k) ** (1.0 / 6.0)
    if sigma.kind == "algebraic":
        p = sigma.params["p"]
        return k ** (1.0 / 3.0 + 2.0 / (3.0 * (3.0 * p + 1.0)))
    raise ValueError(f"no closed form for {sigma.name}")


def table_row(tails: TailIntegrals, k: float) -> dict:
    """Numeric values behind one row of the rating table for a built-in sigma."""
    sigma = tails.sigma
    if sigma.kind not in ("logistic", "erf", "algebraic"):
        raise ValueError(f"table rows exist only for built-in pots, not {sigma.name}")
    return {
        "sigma": sigma.name,
        "k": k,
        "n2_estimate": two_player_estimate(tails, k),
        "n2_closed_form": two_player_closed_form(sigma, k),
        "ladder_guarantee": ladder_guarantee(sigma, k),
        "many_player_form": many_player_form(sigma, k),
        "rating_cap": rating_cap(k, tails),
    }


# --- report --------------------------------------------------------------------------

@dataclass
class BoundReport:
    sigma: str
    k: float | None = None
    R: float | None = None
    two_player_low: float | None = None
    two_player_high: float | None = None
    ladder_guarantee: float | None = None
    phi_lower_bound: float | None = None
    games_lower_bound: float | None = None
    rating_cap: float | None = None
    constants: dict = field(default_factory=dict)

    FIELDS = ("sigma", "k", "R", "two_player_low", "two_player_high", "ladder_guarantee",
              "phi_lower_bound", "games_lower_bound", "rating_cap")

    def row(self, with_constants: bool = False) -> dict:
        out = {f: getattr(self, f) for f in self.FIELDS}
        if with_constants:
            out.update(self.constants)
        return out


def bound_report(tails: TailIntegrals, k: float | None = None, R: float | None = None,
                 a: float | None = None) -> BoundReport:
    """Evaluate every bound at game count ``k`` and/or rating ``R``.

    When only ``k`` is given, the rating-side bounds are evaluated at the
    two-player estimate, a rating known to be reachable with ``k`` games.
    """
    if k is None and R is None:
        raise ValueError("need k or R")
    sigma = tails.sigma
    if a is None:
        a, x0 = default_growth(tails)
    else:
        x0 = 0.0
    C = games_constant(sigma)
    rep = BoundReport(sigma.name, k=k, R=R)
    rep.constants = {
        "threshold": sigma.threshold,
        "ladder_rate": sigma.ladder_rate,
        "stretch_sup": sigma.stretch_sup,
        "cost_constant": sigma.cost_constant,
        "phi_constant": sigma.phi_constant,
        "games_constant": C,
        "growth_a": a,
        "growth_from": x0,
    }
    if k is not None:
        if k < 0:
            raise ValueError("k must be >= 0")
        rep.two_player_low, rep.two_player_high = two_player_interval(tails, k)
        rep.ladder_guarantee = ladder_guarantee(sigma, k)
        rep.rating_cap = rating_cap(k, tails, C=C, a=a, x0=x0)
        if R is None and k > 0:
            rep.R = R = two_player_estimate(tails, k)
    if R is not None:
        rep.phi_lower_bound = phi_lower_bound(R, tails)
        rep.games_lower_bound = games_lower_bound(R, tails, C)
    return rep
