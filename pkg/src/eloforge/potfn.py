"""Pot functions: the stake rule sigma and its regularity checks.

A pot function maps a rating difference ``z = r_A - r_B`` to the number of
points player A puts into a unit pot.  Every built-in is defined through its
lower tail ``sigma(-u)`` so that both tails are computed without cancellation;
the upper half is then ``1 - sigma(-z)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

SQRT2 = math.sqrt(2.0)
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

# probe ranges for the cached constants
STRETCH_RANGE = 100.0
STRETCH_POINTS = 20001
STRETCH_MARGIN = 0.01
THRESHOLD_RANGE = 200.0
THRESHOLD_CUTOFF = 100.0
THRESHOLD_POINTS = 4001


def golden_section_max(func, a, b, tol=1e-12, max_iter=200):
    """Maximise a unimodal ``func`` on ``[a, b]``; returns ``(x, func(x))``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = func(d)
    x = 0.5 * (a + b)
    return x, func(x)


# --- built-in lower tails, u >= 0 -------------------------------------------

def _logistic_tail(u):
    e = np.exp(-u)
    return e / (1.0 + e)


def _logistic_tail_scalar(u):
    e = math.exp(-u)
    return e / (1.0 + e)


def _logistic_log_tail(u):
    return -np.logaddexp(0.0, u)


def _erf_tail(u):
    return special.ndtr(-u)


def _erf_tail_scalar(u):
    return 0.5 * math.erfc(u / SQRT2)


def _erf_log_tail(u):
    return special.log_ndtr(-u)


def _algebraic_tail(p):
    def tail(u):
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        small = u <= 1.0
        us = u[small]
        out[small] = 0.5 * (1.0 - us / (1.0 + us ** p) ** (1.0 / p))
        ul = u[~small]
        out[~small] = -0.5 * np.expm1(-np.log1p(ul ** -p) / p)
        return out

    def tail_scalar(u):
        if u <= 1.0:
            return 0.5 * (1.0 - u / (1.0 + u ** p) ** (1.0 / p))
        return -0.5 * math.expm1(-math.log1p(u ** -p) / p)

    def log_tail(u):
        return np.log(tail(u))

    return tail, tail_scalar, log_tail


def _symmetric(tail_scalar):
    """Scalar ``sigma(-u)`` valid for any real u, built from a u >= 0 tail."""
    def lower(u):
        if u >= 0.0:
            return tail_scalar(u)
        return 1.0 - tail_scalar(-u)
    return lower


class PotFunction:
    """A pot function sigma with cached derived constants.

    Built-ins are constructed through :func:`make_pot`.  A custom function can
    be wrapped directly (``PotFunction.custom(func)``); that path performs no
    validation, which is what :func:`validate_pot` is for.

    Instances are immutable; the cached constants are pure functions of sigma,
    so a concurrent first access at worst computes the same value twice.
    """

    def __init__(self, name, kind, *, tail=None, tail_scalar=None, log_tail=None,
                 func=None, params=None):
        self.name = name
        self.kind = kind
        self.params = dict(params or {})
        self._func = func
        self._tail = tail
        self._log_tail = log_tail
        if tail_scalar is not None:
            self.lower_scalar = _symmetric(tail_scalar)
        elif func is not None:
            self.lower_scalar = lambda u: float(func(np.array([-u]))[0])

    @classmethod
    def custom(cls, func, name="custom", *, log_tail=None, params=None):
        """Wrap an arbitrary vectorised ``func(z)`` without validating it.

        ``log_tail`` optionally gives an accurate ``log sigma(-u)`` for
        ``u >= 0``; otherwise the tails are read off ``func`` directly.
        """
        return cls(name, "custom", func=func, log_tail=log_tail, params=params)

    def __repr__(self):
        return f"PotFunction({self.name!r})"

    # --- evaluation ----------------------------------------------------------

    def __call__(self, z):
        return self.eval(z)

    def eval(self, z):
        """sigma(z), vectorised."""
        z = np.asarray(z, dtype=float)
        if self._tail is None:
            return np.asarray(self._func(z), dtype=float)
        neg = z < 0
        a = np.abs(z)
        t = self._tail(a)
        return np.where(neg, t, 1.0 - t)

    def lower(self, u):
        """sigma(-u), vectorised and accurate in the left tail."""
        u = np.asarray(u, dtype=float)
        if self._tail is None:
            return np.asarray(self._func(-u), dtype=float)
        pos = u >= 0
        t = self._tail(np.abs(u))
        return np.where(pos, t, 1.0 - t)

    def log_lower(self, u):
        """log sigma(-u) for u >= 0; stays finite where sigma(-u) underflows."""
        u = np.asarray(u, dtype=float)
        if self._log_tail is not None:
            return self._log_tail(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.lower(u))

    def log_upper(self, z):
        """log(1 - sigma(z)) for z >= 0."""
        z = np.asarray(z, dtype=float)
        if self._func is None:
            return self.log_lower(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log1p(-np.asarray(self._func(z), dtype=float))

    def sigma_scalar(self, z):
        return self.lower_scalar(-z)

    # --- cached constants ------------------------------------------------------

    @cached_property
    def _stretch(self):
        z = np.linspace(0.0, STRETCH_RANGE, STRETCH_POINTS)
        vals = self.stretch_ratio(z)
        k = int(np.nanargmax(vals))
        best = float(vals[k])
        if k == 0:
            # the endpoint is sampled exactly, no refinement error to cover
            return best, 0.0, False
        lo = z[max(k - 1, 0)]
        hi = z[min(k + 1, len(z) - 1)]
        x, v = golden_section_max(lambda s: float(self.stretch_ratio(np.array([s]))[0]), lo, hi)
        if v < best:
            x, v = float(z[k]), best
        return v * (1.0 + STRETCH_MARGIN), float(x), True

    def stretch_ratio(self, z):
        """sigma(-z) / sigma(-z - 2 sigma(-z)), computed in log space."""
        z = np.asarray(z, dtype=float)
        shifted = z + 2.0 * self.lower(z)
        return np.exp(self.log_lower(z) - self.log_lower(shifted))

    @property
    def stretch_sup(self) -> float:
        """Sampled supremum of the stretch ratio over z in [0, 100]."""
        return self._stretch[0]

    @property
    def stretch_argmax(self) -> float:
        return self._stretch[1]

    @cached_property
    def threshold(self) -> float | None:
        """The ladder threshold, argmax of sigma(-z) z^2 (None if unbounded)."""
        return compute_threshold(self)

    @cached_property
    def ladder_rate(self) -> float | None:
        a = self.threshold
        if a is None:
            return None
        return (self.lower_scalar(a) * a * a) ** (1.0 / 3.0)

    @property
    def cost_constant(self) -> float:
        """Bound on d/dt of the continuous cost of a non-upset edge."""
        return 2.0 * self.stretch_sup

    @cached_property
    def phi_constant(self) -> float:
        """Per-unit-pot growth bound of the sorted-gap potential."""
        return 6.0 + 4.0 * self.stretch_sup + 1.0 / self.lower_scalar(1.0)

    @cached_property
    def max_slope(self) -> float:
        z = np.linspace(-50.0, 50.0, 200001)
        s = self.eval(z)
        return float(np.max(np.diff(s) / np.diff(z)))

    def constants(self) -> dict:
        return {
            "stretch_sup": self.stretch_sup,
            "stretch_argmax": self.stretch_argmax,
            "threshold": self.threshold,
            "ladder_rate": self.ladder_rate,
            "cost_constant": self.cost_constant,
            "phi_constant": self.phi_constant,
        }


def compute_threshold(sigma: PotFunction) -> float | None:
    """Maximiser of sigma(-z) z^2 over z >= 0, or None when it keeps growing.

    A coarse log-spaced scan over (0, 200] locates the best grid point, which a
    golden-section search then refines on the bracketing cells.  No
    unimodality is assumed beyond that bracket.
    """
    z = np.geomspace(1e-4, THRESHOLD_RANGE, THRESHOLD_POINTS)
    vals = np.exp(sigma.log_lower(z) + 2.0 * np.log(z))
    inner = vals[z <= THRESHOLD_CUTOFF]
    if vals[-1] > inner.max():
        return None
    k = int(np.argmax(vals))
    lo, hi = z[max(k - 1, 0)], z[min(k + 1, len(z) - 1)]
    obj = lambda s: sigma.lower_scalar(s) * s * s
    x, _ = golden_section_max(obj, float(lo), float(hi), tol=1e-14)
    return float(x)


# --- construction ------------------------------------------------------------

def make_pot(kind: str, *, p: float | None = None, func=None, path=None,
             validate: bool = True) -> PotFunction:
    """Build a pot function.

    ``kind`` is ``"logistic"``, ``"algebraic"`` (needs ``p >= 1``), ``"erf"``,
    ``"custom"`` (needs ``func``) or ``"table"`` (needs ``path`` to a z,sigma
    CSV).  Custom and table pots are validated and rejected on failure.
    """
    if kind == "logistic":
        return PotFunction("logistic", "logistic", tail=_logistic_tail,
                           tail_scalar=_logistic_tail_scalar,
                           log_tail=_logistic_log_tail)
    if kind == "erf":
        return PotFunction("erf", "erf", tail=_erf_tail,
                           tail_scalar=_erf_tail_scalar, log_tail=_erf_log_tail)
    if kind == "algebraic":
        if p is None or not math.isfinite(p) or p < 1:
            raise ValueError(f"algebraic pot needs p >= 1, got {p!r}")
        tail, tail_scalar, log_tail = _algebraic_tail(float(p))
        return PotFunction(f"alg:p={p:g}", "algebraic", tail=tail,
                           tail_scalar=tail_scalar, log_tail=log_tail,
                           params={"p": float(p)})
    if kind == "custom":
        if func is None:
            raise ValueError("custom pot needs func")
        pot = PotFunction.custom(func)
    elif kind == "table":
        if path is None:
            raise ValueError("table pot needs a CSV path")
        pot = load_table(path)
    else:
        raise ValueError(f"unknown pot kind {kind!r}")
    if validate:
        report = validate_pot(pot)
        if not report.ok:
            raise ValueError(f"pot function {pot.name!r} fails validation: {report.summary()}")
    return pot


def parse_sigma(spec: str, validate: bool = True) -> PotFunction:
    """Parse the command-line names ``logistic``, ``erf``, ``alg:p=<p>``, ``csv:<path>``."""
    if spec in ("logistic", "erf"):
        return make_pot(spec)
    if spec.startswith("alg:p="):
        try:
            p = float(spec[len("alg:p="):])
        except ValueError:
            raise ValueError(f"bad algebraic exponent in {spec!r}") from None
        return make_pot("algebraic", p=p)
    if spec.startswith("csv:"):
        return make_pot("table", path=spec[4:], validate=validate)
    raise ValueError(f"unknown sigma {spec!r}")


def load_table(path) -> PotFunction:
    """Pot function from a two-column ``z,sigma`` CSV.

    Interpolation is monotone (PCHIP) on ``log sigma`` for z <= 0 and on
    ``log(1 - sigma)`` for z >= 0, extended linearly in log space beyond the
    table, so both tails decay exponentially and stay representable.
    """
    zs, ss = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                zs.append(float(row[0]))
                ss.append(float(row[1]))
            except ValueError:
                continue  # header
    z = np.asarray(zs)
    s = np.asarray(ss)
    order = np.argsort(z)
    z, s = z[order], s[order]
    if len(z) < 4 or np.any(np.diff(z) <= 0):
        raise ValueError(f"{path}: need at least 4 distinct z values")
    if np.any(s <= 0) or np.any(s >= 1):
        raise ValueError(f"{path}: sigma values must lie in (0, 1)")
    left = z <= 0
    right = z >= 0
    if left.sum() < 2 or right.sum() < 2:
        raise ValueError(f"{path}: table must cover both signs of z")
    lz, lv = z[left], np.log(s[left])
    rz, rv = z[right], np.log1p(-s[right])
    lint = PchipInterpolator(lz, lv, extrapolate=False)
    rint = PchipInterpolator(rz, rv, extrapolate=False)
    lslope = (lv[1] - lv[0]) / (lz[1] - lz[0])
    rslope = (rv[-1] - rv[-2]) / (rz[-1] - rz[-2])

    def log_left(x):  # log sigma(x), x <= 0
        x = np.asarray(x, dtype=float)
        out = lint(np.clip(x, lz[0], lz[-1]))
        below = x < lz[0]
        return np.where(below, lv[0] + lslope * (x - lz[0]), out)

    def log_right(x):  # log(1 - sigma(x)), x >= 0
        x = np.asarray(x, dtype=float)
        out = rint(np.clip(x, rz[0], rz[-1]))
        above = x > rz[-1]
        return np.where(above, rv[-1] + rslope * (x - rz[-1]), out)

    def func(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            lo = np.exp(log_left(np.minimum(x, 0.0)))
            hi = -np.expm1(log_right(np.maximum(x, 0.0)))
        return np.where(x <= 0, lo, hi)

    def tail(u):
        return np.exp(log_left(-np.asarray(u, dtype=float)))

    def log_tail(u):
        return log_left(-np.asarray(u, dtype=float))

    pot = PotFunction("csv:" + str(path), "custom", func=func, log_tail=log_tail,
                      params={"path": str(path)})
    # lower tail from the left table, upper gap from the right table
    pot.lower = lambda u: np.where(np.asarray(u) >= 0, tail(np.abs(u)), func(-np.asarray(u, dtype=float)))
    pot.log_upper = lambda x: log_right(np.asarray(x, dtype=float))
    pot.lower_scalar = lambda u: float(pot.lower(np.array([u]))[0])
    return pot


# --- validation --------------------------------------------------------------

ASSUMPTIONS = ("positive_increasing", "symmetric", "bounded_drop", "finite_stretch")


@dataclass
class ValidationReport:
    name: str
    passed: dict = field(default_factory=dict)
    witness: dict = field(default_factory=dict)
    symmetry_error: float = math.nan
    stretch_sup: float = math.nan
    stretch_argmax: float = math.nan

    @property
    def ok(self) -> bool:
        return all(self.passed.get(a, False) for a in ASSUMPTIONS)

    def summary(self) -> str:
        parts = []
        for a in ASSUMPTIONS:
            if self.passed.get(a):
                parts.append(f"{a}=pass")
            else:
                parts.append(f"{a}=FAIL(z={self.witness.get(a)})")
        return ", ".join(parts)

    def rows(self):
        for a in ASSUMPTIONS:
            yield {"assumption": a, "passed": self.passed.get(a, False),
                   "witness": self.witness.get(a, "")}


def _first_bad(z, bad):
    idx = np.flatnonzero(bad)
    return float(z[idx[0]]) if len(idx) else None


def validate_pot(sigma: PotFunction, z_max: float = 50.0, points: int = 20001,
                 sym_tol: float = 1e-12) -> ValidationReport:
    """Check the four pot-function assumptions on a symmetric grid.

    A failing sigma produces a failing report with the first offending z as
    witness; nothing is raised for it.  The grid itself must span at least
    [-50, 50] with 10^4 points.
    """
    if z_max < 50.0 or points < 10_000:
        raise ValueError("validation grid must span [-50, 50] with >= 1e4 points")
    rep = ValidationReport(sigma.name)
    z = np.linspace(-z_max, z_max, points)
    neg = z[z < 0]
    pos = z[z >= 0]

    with np.errstate(all="ignore"):
        # 1. positive and strictly increasing; tails are compared in log space
        # because sigma rounds to 0 or 1 long before the grid ends
        log_left = sigma.log_lower(-neg)
        log_gap = sigma.log_upper(pos)
        s_pos = sigma.eval(pos)
        bad_left = ~np.isfinite(log_left)
        bad_right = ~(s_pos > 0)
        witness = _first_bad(neg, bad_left)
        if witness is None:
            witness = _first_bad(pos, bad_right)
        if witness is None:
            dl = np.diff(log_left)
            # 1 - sigma may round to 0 on the right: -inf there only has to stay -inf
            fin = np.isfinite(log_gap)
            saturated = log_gap == -np.inf
            bad_gap = ~(fin | saturated)
            dr = np.diff(np.where(saturated, -np.inf, log_gap))
            # deep in the right tail sigma moves in ulp steps, so neighbours
            # may round to the same float
            rounded_tie = (dr == 0) & (s_pos[1:] == s_pos[:-1]) & (log_gap[1:] < -18.0)
            bad_dr = ~((dr < 0) | (saturated[1:] & saturated[:-1]) | rounded_tie)
            if np.any(~(dl > 0)):
                witness = _first_bad(neg[1:], ~(dl > 0))
            elif bad_gap.any():
                witness = _first_bad(pos, bad_gap)
            elif np.any(bad_dr):
                witness = _first_bad(pos[1:], bad_dr)
            elif len(neg) and not sigma.eval(neg[-1:])[0] < s_pos[0]:
                witness = float(pos[0])
        rep.passed["positive_increasing"] = witness is None
        rep.witness["positive_increasing"] = witness

        # 2. sigma(z) + sigma(-z) = 1
        err = np.abs(sigma.eval(z) + sigma.eval(-z) - 1.0)
        err = np.where(np.isfinite(err), err, np.inf)
        rep.symmetry_error = float(err.max())
        rep.passed["symmetric"] = rep.symmetry_error <= sym_tol
        rep.witness["symmetric"] = None if rep.passed["symmetric"] else float(z[int(np.argmax(err))])

        # 3. sigma(2 - 2z) < 1/z for z > 0
        zp = pos[pos > 0]
        lhs = sigma.eval(2.0 - 2.0 * zp)
        bad = ~(lhs < 1.0 / zp)
        rep.passed["bounded_drop"] = not bad.any()
        rep.witness["bounded_drop"] = _first_bad(zp, bad)

        # 4. sup of the stretch ratio is finite
        try:
            sup = sigma.stretch_sup
            arg = sigma.stretch_argmax
        except (ValueError, FloatingPointError):
            sup, arg = math.nan, math.nan
        rep.stretch_sup = sup
        rep.stretch_argmax = arg
        rep.passed["finite_stretch"] = bool(math.isfinite(sup))
        rep.witness["finite_stretch"] = None if math.isfinite(sup) else arg
    return rep


BUILTINS = ("logistic", "erf", "alg:p=1", "alg:p=2", "alg:p=3")
