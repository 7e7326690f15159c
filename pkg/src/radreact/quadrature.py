"""Quadrature engine for the oscillatory integrals behind every correlation function.

The main entry point, :func:`fourier_integral`, evaluates
``int_0^inf f(w) cos(w t) dw`` (or ``sin``).  The half-line is cut at the
zeros of the trigonometric factor; each half-cycle panel is integrated by an
adaptive, vectorised Gauss-Legendre pair, and the resulting alternating series
of panel contributions is summed with Wynn's epsilon algorithm.  Plain adaptive
quadrature over the whole line fails once ``t`` is large compared with the
scale of ``f``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import NumericError

__all__ = [
    "QuadResult",
    "adaptive_panels",
    "feature_edges",
    "fourier_integral",
    "wynn_epsilon",
]

_GL_LO = np.polynomial.legendre.leggauss(15)
_GL_HI = np.polynomial.legendre.leggauss(31)


class QuadResult(NamedTuple):
    value: float
    abserr: float


def _gauss(f, a, b, rule, with_abs=False):
    x, w = rule
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = f(nodes.ravel()).reshape(nodes.shape)
    if with_abs:
        return half * (vals @ w), np.abs(half) * (np.abs(vals) @ w)
    return half * (vals @ w)


def adaptive_panels(
    f, edges, rtol=1e-12, atol=0.0, scale=0.0, max_depth=50, max_active=200_000,
    return_panels=False,
):
    """Integrate a vectorised ``f`` over consecutive panels given by ``edges``.

    Each panel is checked by comparing 15- and 31-point Gauss-Legendre rules and
    bisected until the difference is below the larger of ``rtol*|I_panel|`` and
    an absolute floor.  The floor is ``max(atol, rtol*S)`` shared between
    panels in proportion to their length, where ``S`` is ``scale`` or, if
    larger, the first-pass estimate of ``int |f|``.  Returns per-panel values
    when ``return_panels`` is true, otherwise the total as a
    :class:`QuadResult`.
    """
    edges = np.asarray(edges, dtype=float)
    a0, b0 = edges[:-1], edges[1:]
    n_panels = a0.size
    total_len = float(np.sum(b0 - a0)) or 1.0
    owner = np.arange(n_panels)
    a, b = a0.copy(), b0.copy()
    values = None
    errors = np.zeros(n_panels)
    floor = None
    for _ in range(max_depth):
        if a.size == 0:
            break
        if a.size > max_active:
            raise NumericError("adaptive quadrature exceeded its panel budget",
                               residual=float(np.sum(errors)))
        hi, mag = _gauss(f, a, b, _GL_HI, with_abs=True)
        lo = _gauss(f, a, b, _GL_LO)
        if values is None:
            values = np.zeros(n_panels, dtype=hi.dtype)
            floor = max(atol, rtol * max(scale, float(np.sum(np.abs(hi)))))
        if not np.all(np.isfinite(hi)):
            raise NumericError("integrand is not finite on the integration range")
        err = np.abs(hi - lo)
        tol = np.maximum(floor * (b - a) / total_len, rtol * np.abs(hi))
        # rounding noise in f (e.g. from a subtraction) sets a hard floor
        tol = np.maximum(tol, 1e3 * np.finfo(float).eps * mag)
        done = (err <= tol) | ((b - a) <= 1e-14 * np.maximum(np.abs(a), np.abs(b)))
        if float(np.sum(err[~done])) <= 0.5 * floor:
            # remaining panels jointly fit the absolute budget (noise spikes)
            done[:] = True
        np.add.at(values, owner[done], hi[done])
        np.add.at(errors, owner[done], err[done])
        keep = ~done
        mid = 0.5 * (a[keep] + b[keep])
        a, b, owner = (
            np.concatenate([a[keep], mid]),
            np.concatenate([mid, b[keep]]),
            np.concatenate([owner[keep], owner[keep]]),
        )
    else:
        if a.size:
            hi = _gauss(f, a, b, _GL_HI)
            lo = _gauss(f, a, b, _GL_LO)
            np.add.at(values, owner, hi)
            np.add.at(errors, owner, np.abs(hi - lo))
    if return_panels:
        return values, errors
    if np.iscomplexobj(values):
        total = complex(math.fsum(values.real), math.fsum(values.imag))
    else:
        total = float(math.fsum(values))
    return QuadResult(total, float(np.sum(errors)))


def feature_edges(lo, hi, features=(), n_base=8):
    """Panel edges on ``[lo, hi]`` refined geometrically around narrow features.

    ``features`` is a sequence of ``(center, width)`` pairs, e.g. a resonance at
    ``omega1`` with half-width ``gamma/2``.
    """
    pts = list(np.linspace(lo, hi, n_base + 1))
    for center, width in features:
        if width <= 0 or not np.isfinite(center):
            continue
        span = max(hi - lo, width)
        k = width / 4.0
        while k < span:
            for p in (center - k, center + k):
                if lo < p < hi:
                    pts.append(p)
            k *= 2.0
        if lo < center < hi:
            pts.append(center)
    return np.unique(np.asarray(pts, dtype=float))


def wynn_epsilon(seq):
    """Wynn's epsilon extrapolation of a sequence of partial sums.

    Returns ``(estimate, error_estimate)`` built from the last two
    even-column entries.
    """
    s = [float(x) for x in seq]
    n = len(s)
    if n < 3:
        return s[-1], abs(s[-1] - s[-2]) if n > 1 else math.inf
    prev = [0.0] * (n + 1)
    cur = s[:]
    best = s[-1]
    best_prev = s[-2]
    col = 0
    while len(cur) > 1:
        nxt = []
        for i in range(len(cur) - 1):
            d = cur[i + 1] - cur[i]
            if d == 0.0:
                nxt.append(math.inf)
            else:
                nxt.append(prev[i + 1] + 1.0 / d)
        prev, cur = cur, nxt
        col += 1
        if col % 2 == 0 and cur and all(math.isfinite(v) for v in cur[-2:]):
            if len(cur) >= 2:
                best, best_prev = cur[-1], cur[-2]
            else:
                best, best_prev = cur[-1], best
        if not all(math.isfinite(v) for v in cur):
            break
    return best, abs(best - best_prev)


def fourier_integral(
    f,
    t,
    kind="cos",
    *,
    head=1.0,
    features=(),
    rtol=1e-10,
    atol=0.0,
    max_panels=200_000,
):
    """``int_0^inf f(w) trig(w t) dw`` for ``trig`` in {cos, sin}.

    Parameters
    ----------
    f : callable
        Vectorised integrand envelope; must decay (at least like ``1/w``) for
        the series to converge.
    t : float
        Lag.  ``t = 0`` reduces to a plain semi-infinite integral (cos) or 0 (sin).
    head : float
        Frequency beyond which ``f`` is smooth and monotone; everything up to
        the first trigonometric zero past ``head`` is integrated directly.
    features : sequence of (center, width)
        Narrow structures inside the head interval.

    Returns
    -------
    QuadResult
    """
    if kind not in ("cos", "sin"):
        raise ValueError("kind must be 'cos' or 'sin'")
    t = float(t)
    sign = 1.0
    if t < 0:
        t = -t
        if kind == "sin":
            sign = -1.0
    if t == 0.0:
        if kind == "sin":
            return QuadResult(0.0, 0.0)
        return _semi_infinite(f, head, features, rtol, atol)

    if kind == "cos":
        g = lambda w: f(w) * np.cos(w * t)  # noqa: E731
        first = 0.5 * math.pi / t
    else:
        g = lambda w: f(w) * np.sin(w * t)  # noqa: E731
        first = math.pi / t
    step = math.pi / t
    # first zero of the trig factor at or beyond `head`
    k0 = max(0, math.ceil((head - first) / step))
    A = first + k0 * step

    # Head: panels no longer than one half-cycle, refined at features.
    n_half = max(1, math.ceil(A / step))
    base = np.concatenate([[0.0], first + step * np.arange(0, k0 + 1)]) if A > 0 else [0.0]
    base = np.unique(np.concatenate([base, feature_edges(0.0, A, features, n_base=1)]))
    if n_half > max_panels:
        raise NumericError(f"too many oscillation cycles ({n_half}) in the head interval")
    head_val, head_err = adaptive_panels(g, base, rtol=rtol, atol=atol)

    # Tail: half-cycle panels, summed with epsilon acceleration.
    partial = [head_val]
    err_acc = head_err
    scale = abs(head_val)
    batch = 32
    k = 0
    last_est = None
    while k < max_panels:
        edges = A + step * np.arange(k, k + batch + 1)
        vals, errs = adaptive_panels(
            g, edges, rtol=rtol, atol=atol, scale=scale, return_panels=True
        )
        err_acc += float(np.sum(errs))
        for v in vals:
            partial.append(partial[-1] + v)
        k += batch
        scale = max(scale, max(abs(p) for p in partial[-batch:]))
        tiny = max(atol, rtol * scale, 1e-300)
        if np.all(np.abs(vals[-4:]) <= 0.1 * tiny):
            return QuadResult(sign * partial[-1], err_acc + float(np.sum(np.abs(vals[-4:]))))
        est, est_err = wynn_epsilon(partial[-min(len(partial), 48):])
        if last_est is not None:
            diff = abs(est - last_est)
            if diff <= max(tiny, 0.0) and est_err <= max(10 * tiny, 0.0):
                return QuadResult(sign * est, err_acc + diff + est_err)
        last_est = est
    raise NumericError(
        f"oscillatory tail did not converge after {max_panels} half-cycles",
        residual=abs(partial[-1] - partial[-2]),
    )


def _semi_infinite(f, head, features, rtol, atol):
    edges = feature_edges(0.0, head, features)
    head_val, head_err = adaptive_panels(f, edges, rtol=rtol, atol=atol)
    # geometric panels on [head, inf): w = head * 2**k
    total, err = head_val, head_err
    lo = head
    for _ in range(200):
        hi = lo * 2.0
        v, e = adaptive_panels(f, np.linspace(lo, hi, 3), rtol=rtol, atol=atol, scale=abs(total))
        total += v
        err += e
        if abs(v) <= max(atol, rtol * abs(total)) * 1e-2 and hi > 64 * head:
            return QuadResult(total, err + abs(v))
        lo = hi
    raise NumericError("semi-infinite integral did not converge", residual=abs(v))
