"""Tail integrals of a pot function and their inverses.

``cumulative(x) = int_0^x dt / sigma(-t)`` measures how fast the left tail of
sigma vanishes; ``moment(x) = int_0^x t * cumulative''(t) dt`` is its first
moment, evaluated through the integration-by-parts form
``x / sigma(-x) - cumulative(x)``.

Evaluation uses a lazily grown table of panel integrals (adaptive Simpson per
panel) plus a fixed Gauss-Legendre rule for the partial panel, which keeps
vectorised calls cheap.
"""
from __future__ import annotations

import math
import threading

import numpy as np
from scipy.optimize import brentq

from .potfn import PotFunction

PANEL = 0.25
GL_ORDER = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
# integrand 1/sigma(-x) must stay below exp(LOG_LIMIT)
LOG_LIMIT = 700.0
X_CAP = 1e7


def adaptive_simpson(func, a, b, tol=1e-10, max_depth=60, rel=True):
    """Adaptive Simpson quadrature of a scalar ``func`` over ``[a, b]``.

    With ``rel=True`` the tolerance is scaled by ``max(1, |I|)`` using the
    coarse estimate of the integral, which is what smooth but fast-growing
    integrands need.  Recursion stops at ``max_depth`` or when the interval
    can no longer be split in floating point.
    """
    if a == b:
        return 0.0
    fa, fm, fb = func(a), func(0.5 * (a + b)), func(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    if rel:
        tol = tol * max(1.0, abs(whole))
    return _simpson_step(func, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson_step(func, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = func(lm), func(rm)
    left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
    right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol or not (a < lm < m < rm < b):
        return left + right + delta / 15.0
    return (_simpson_step(func, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _simpson_step(func, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))


def _check_arg(x, what="x"):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} must be finite")
    if np.any(x < 0):
        raise ValueError(f"{what} must be >= 0, got {x.min()}")
    return x


class TailIntegrals:
    """Tail integrals for one pot function, with monotone inverses.

    ``quad_tol`` is the target error, relative to ``max(1, |value|)``.
    The panel table is the only mutable state and is guarded by a lock.
    """

    def __init__(self, sigma: PotFunction, quad_tol: float = 1e-10):
        self.sigma = sigma
        self.quad_tol = quad_tol
        self._table = [0.0]  # cumulative at k * PANEL
        self._lock = threading.Lock()
        self.x_max = self._find_limit()

    def __repr__(self):
        return f"TailIntegrals({self.sigma.name!r}, quad_tol={self.quad_tol:g})"

    def _find_limit(self):
        """Largest x with 1/sigma(-x) comfortably below the float range."""
        def excess(x):
            return -float(self.sigma.log_lower(np.array([x]))[0]) - LOG_LIMIT
        if excess(X_CAP) < 0:
            return X_CAP
        hi = 1.0
        while excess(hi) < 0:
            hi *= 2.0
        return brentq(excess, hi / 2.0 if hi > 1 else 0.0, hi, xtol=1e-9)

    # --- integrands -------------------------------------------------------------

    def integrand(self, t):
        """1 / sigma(-t), vectorised."""
        return np.exp(-self.sigma.log_lower(np.asarray(t, dtype=float)))

    def _integrand_scalar(self, t):
        return 1.0 / self.sigma.lower_scalar(t)

    def second_derivative(self, t):
        """cumulative''(t) by central differences of the integrand.

        Steps h and h/2 are combined by Richardson extrapolation; a plain
        central difference loses about h^2 t^2 / 6 in relative terms for
        Gaussian tails, which is 1e-5 at t = 30.
        """
        h = max(1e-5, 1e-5 * abs(t))
        q = self._integrand_scalar
        d1 = (q(t + h) - q(t - h)) / (2.0 * h)
        d2 = (q(t + 0.5 * h) - q(t - 0.5 * h)) / h
        return (4.0 * d2 - d1) / 3.0

    # --- panel table ------------------------------------------------------------

    def _extend(self, k):
        with self._lock:
            table = self._table
            while len(table) <= k:
                j = len(table) - 1
                a, b = j * PANEL, (j + 1) * PANEL
                piece = adaptive_simpson(self._integrand_scalar, a, b, self.quad_tol / 8.0)
                table.append(table[-1] + piece)

    def _gauss(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        pts = mid[..., None] + half[..., None] * _GL_X
        return half * (self.integrand(pts) @ _GL_W)

    def _check_range(self, x):
        if x.size and x.max() > self.x_max:
            raise ValueError(
                f"x={x.max():g} beyond the representable range of {self.sigma.name} "
                f"(x_max={self.x_max:g})")

    # --- public -----------------------------------------------------------------

    def cumulative(self, x):
        """int_0^x dt / sigma(-t); vectorised over ``x >= 0``."""
        x = _check_arg(x)
        self._check_range(x)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        idx = np.floor(x / PANEL).astype(np.int64)
        if idx.size:
            self._extend(int(idx.max()))
        base = np.asarray(self._table)[idx]
        out = base + self._gauss(idx * PANEL, x)
        return float(out[0]) if scalar else out

    def integral(self, a, b):
        """int_a^b dt / sigma(-t) for 0 <= a <= b, without cancellation for short spans."""
        if b < a:
            raise ValueError("need a <= b")
        _check_arg(a, "a")
        self._check_range(np.asarray(b, dtype=float))
        if b - a <= PANEL:
            return float(self._gauss(np.array([a]), np.array([b]))[0])
        return float(self.cumulative(b) - self.cumulative(a))

    def integral_span(self, a, width):
        """int_a^{a+width} dt / sigma(-t), taking the width as given.

        ``a + width`` may round back to ``a`` (or up a whole ulp) when the width
        is below the spacing of floats near ``a``; the result stays ~ width / sigma(-a).
        """
        if width < 0:
            raise ValueError("need width >= 0")
        if width > PANEL:
            return self.integral(a, a + width)
        _check_arg(a, "a")
        self._check_range(np.asarray(a + width, dtype=float))
        half = 0.5 * width
        pts = (a + half) + half * _GL_X
        return float(half * (self.integrand(pts) @ _GL_W))

    def moment(self, x):
        """x / sigma(-x) - cumulative(x), i.e. int_0^x t cumulative''(t) dt."""
        x = _check_arg(x)
        self._check_range(x)
        return x * self.integrand(x) - self.cumulative(x)

    def moment_direct(self, x, tol=1e-9):
        """The moment by direct quadrature of t * cumulative''(t) (cross-check path)."""
        x = float(_check_arg(x))
        self._check_range(np.asarray(x))
        return adaptive_simpson(lambda t: t * self.second_derivative(t), 0.0, x, tol)

    def _invert(self, fn, y, what):
        y = float(y)
        if not math.isfinite(y) or y < 0:
            raise ValueError(f"{what} argument must be finite and >= 0, got {y}")
        if y == 0.0:
            return 0.0
        lo, hi = 0.0, 1.0
        while fn(hi) < y:
            if hi >= self.x_max:
                raise ValueError(f"{what}({y:g}) exceeds the representable range")
            lo, hi = hi, min(2.0 * hi, self.x_max)
        return brentq(lambda s: fn(s) - y, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                      maxiter=500)

    def cumulative_inv(self, y):
        """Inverse of :meth:`cumulative` on y >= 0."""
        return self._invert(lambda s: float(self.cumulative(s)), y, "cumulative_inv")

    def moment_inv(self, y):
        """Inverse of :meth:`moment` on y >= 0."""
        return self._invert(lambda s: float(self.moment(s)), y, "moment_inv")
