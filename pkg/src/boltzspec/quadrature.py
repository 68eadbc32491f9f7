"""Adaptive quadrature on finite and semi-infinite intervals.

Every inner product, moment and error metric in the package bottoms out
here.  Integrands are evaluated on whole arrays of abscissae at once and may
be vector valued: ``g(x)`` receives a 1-d array of shape ``(m,)`` and returns
either ``(m,)`` or ``(k, m)``.

The scheme is composite Gauss-Legendre with global adaptive bisection.  Each
panel carries its own rule value and the sum over its two halves; the
difference between the two is the panel's error estimate and the refined
value is the one kept.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

DEFAULT_REL_TOL = 1e-13
DEFAULT_ABS_TOL = 1e-15


class QuadratureError(RuntimeError):
    pass


class NonConvergence(QuadratureError):
    pass


class NonFiniteIntegrand(QuadratureError):
    pass


@dataclass(frozen=True)
class IntegralResult:
    value: float | np.ndarray
    error_estimate: float
    evaluations: int


@functools.lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``order``-point rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class CompositeRule:
    """A fixed composite Gauss-Legendre rule on a union of panels.

    ``edges`` has one more entry than there are panels; every panel uses the
    same ``order``.  Reusing one rule for many integrands turns each integral
    into a dot product, which is what the solvers do inside their
    right-hand sides.
    """

    edges: np.ndarray
    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_edges(cls, edges, order: int = 20) -> "CompositeRule":
        edges = np.asarray(edges, dtype=float)
        x, w = gauss_legendre(order)
        lo, hi = edges[:-1, None], edges[1:, None]
        half = 0.5 * (hi - lo)
        nodes = (lo + half * (1.0 + x)).ravel()
        weights = (half * w).ravel()
        return cls(edges=edges, order=order, nodes=nodes, weights=weights)

    @property
    def n_panels(self) -> int:
        return len(self.edges) - 1

    @property
    def upper(self) -> float:
        return float(self.edges[-1])

    def integrate(self, values: np.ndarray) -> float | np.ndarray:
        return values @ self.weights


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteIntegrand("integrand returned a non-finite value")


def _panel_values(g, lo: np.ndarray, hi: np.ndarray, order: int):
    """Rule values on each panel; shape (k, n_panels)."""
    x, w = gauss_legendre(order)
    half = 0.5 * (hi - lo)
    pts = (lo[:, None] + half[:, None] * (1.0 + x)).ravel()
    vals = np.asarray(g(pts), dtype=float)
    _check_finite(vals)
    vals = np.atleast_2d(vals).reshape(-1, len(lo), order)
    return (vals @ w) * half, pts.size


def _adapt(g, edges, rel_tol, abs_tol, order, max_panels):
    """Refine ``edges`` until the summed panel error meets tolerance.

    Returns the final panel bounds, refined values (k, n), errors (k, n) and
    the evaluation count.
    """
    lo = np.asarray(edges[:-1], dtype=float)
    hi = np.asarray(edges[1:], dtype=float)
    mid = 0.5 * (lo + hi)
    coarse, n1 = _panel_values(g, lo, hi, order)
    halves, n2 = _panel_values(g, np.concatenate([lo, mid]), np.concatenate([mid, hi]), order)
    n = len(lo)
    left, right = halves[:, :n], halves[:, n:]
    evals = n1 + n2

    while True:
        fine = left + right
        err = np.abs(fine - coarse)
        total = fine.sum(axis=1)
        scale = np.maximum(rel_tol * np.abs(total), abs_tol)
        normalized = (err / scale[:, None]).max(axis=0)
        if normalized.sum() <= 1.0:
            return lo, hi, fine, err, evals
        if len(lo) >= max_panels:
            raise NonConvergence(
                f"panel budget {max_panels} exhausted; "
                f"error/tolerance ratio {normalized.sum():.3g}"
            )
        # split every panel carrying more than its share, and always the worst one
        split = normalized > 1.0 / len(lo)
        split[np.argmax(normalized)] = True
        s_lo, s_hi = lo[split], hi[split]
        s_mid = 0.5 * (s_lo + s_hi)
        c_lo = np.concatenate([s_lo, s_mid])
        c_hi = np.concatenate([s_mid, s_hi])
        c_coarse = np.concatenate([left[:, split], right[:, split]], axis=1)
        c_mid = 0.5 * (c_lo + c_hi)
        m = len(c_lo)
        quarters, nq = _panel_values(
            g, np.concatenate([c_lo, c_mid]), np.concatenate([c_mid, c_hi]), order
        )
        evals += nq
        keep = ~split
        lo = np.concatenate([lo[keep], c_lo])
        hi = np.concatenate([hi[keep], c_hi])
        coarse = np.concatenate([coarse[:, keep], c_coarse], axis=1)
        left = np.concatenate([left[:, keep], quarters[:, :m]], axis=1)
        right = np.concatenate([right[:, keep], quarters[:, m:]], axis=1)
        idx = np.argsort(lo, kind="stable")
        lo, hi = lo[idx], hi[idx]
        coarse, left, right = coarse[:, idx], left[:, idx], right[:, idx]


def _shape_result(fine, err, evals, squeeze):
    value = fine.sum(axis=1)
    error = float(err.sum(axis=1).max())
    if squeeze:
        value = float(value[0])
    return IntegralResult(value=value, error_estimate=error, evaluations=evals)


def integrate_interval(
    g,
    lo: float,
    hi: float,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    order: int = 15,
    initial_panels: int = 1,
    max_panels: int = 4000,
) -> IntegralResult:
    """Integrate ``g`` over the finite interval [lo, hi]."""
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")
    if hi == lo:
        return IntegralResult(value=0.0, error_estimate=0.0, evaluations=0)
    edges = np.linspace(lo, hi, initial_panels + 1)
    scalar = np.asarray(g(np.array([lo, hi]))).ndim == 1
    plo, phi, fine, err, evals = _adapt(g, edges, rel_tol, abs_tol, order, max_panels)
    return _shape_result(fine, err, evals, scalar)


def tail_cutoff(decay_rate: float, poly_degree: int, abs_tol: float) -> float:
    """Smallest z with  int_z^inf s**deg * exp(-rate*s) ds <= abs_tol.

    The tail equals Gamma(deg+1, rate*z) / rate**(deg+1); the root is found
    on the logarithm so that very small tolerances do not underflow.
    """
    if decay_rate <= 0:
        raise ValueError("decay_rate must be positive")
    s = poly_degree + 1.0
    log_scale = -s * math.log(decay_rate)
    log_tol = math.log(abs_tol)
    if special.gammaln(s) + log_scale <= log_tol:
        return 0.0

    def log_tail(z):
        x = decay_rate * z
        q = special.gammaincc(s, x)
        if q > 0.0:
            return special.gammaln(s) + math.log(q) + log_scale
        # asymptotic form of the upper incomplete gamma function
        return (s - 1.0) * math.log(x) - x + math.log1p((s - 1.0) / x) + log_scale

    hi = max(1.0, s / decay_rate)
    while log_tail(hi) > log_tol:
        hi *= 2.0
    return optimize.brentq(lambda z: log_tail(z) - log_tol, 0.0, hi, xtol=1e-12, rtol=1e-14)


def relative_tail_cutoff(decay_rate: float, poly_degree: int, rel_tol: float) -> float:
    """Cutoff whose neglected tail is ``rel_tol`` times the full integral."""
    s = poly_degree + 1.0
    full = math.exp(special.gammaln(s) - s * math.log(decay_rate))
    return tail_cutoff(decay_rate, poly_degree, rel_tol * full)


def integrate_semi_infinite(
    g,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    decay_rate: float = 0.5,
    poly_degree: int = 4,
    order: int = 15,
    max_panels: int = 4000,
) -> IntegralResult:
    """Integrate ``g`` over [0, inf).

    The domain is truncated at ``tail_cutoff(decay_rate, poly_degree,
    abs_tol)`` and then extended segment by segment for as long as the next
    segment is not negligible, so an underestimated envelope costs time but
    not accuracy.
    """
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")
    scalar = np.asarray(g(np.array([0.0, 1.0]))).ndim == 1
    z_max = max(tail_cutoff(decay_rate, poly_degree, abs_tol), 8.0 / decay_rate)
    initial = max(4, int(math.ceil(z_max / 4.0)))
    edges = np.linspace(0.0, z_max, initial + 1)
    _, _, fine, err, evals = _adapt(g, edges, rel_tol, abs_tol, order, max_panels)
    value = fine.sum(axis=1)
    error = err.sum(axis=1)

    seg = 20.0 / decay_rate
    lo = z_max
    for _ in range(200):
        _, _, tfine, terr, tev = _adapt(
            g, np.linspace(lo, lo + seg, 5), rel_tol, abs_tol, order, max_panels
        )
        evals += tev
        tail = tfine.sum(axis=1)
        value = value + tail
        error = error + terr.sum(axis=1)
        if np.all(np.abs(tail) <= 0.01 * np.maximum(rel_tol * np.abs(value), abs_tol)):
            break
        lo += seg
    else:
        raise NonConvergence("integrand tail does not decay")

    out = float(value[0]) if scalar else value
    return IntegralResult(value=out, error_estimate=float(error.max()), evaluations=evals)


def adapted_rule(
    g,
    lo: float,
    hi: float,
    rel_tol: float = 1e-15,
    abs_tol: float = 1e-300,
    order: int = 20,
    initial_panels: int = 8,
    max_panels: int = 4000,
) -> CompositeRule:
    """Panels adapted to the (vector-valued) probe ``g``, frozen as a rule.

    The rule places ``order`` nodes on each half of every accepted panel, so
    it reproduces the refined values the adaptation converged on.
    """
    edges = np.linspace(lo, hi, initial_panels + 1)
    plo, phi, _, _, _ = _adapt(g, edges, rel_tol, abs_tol, order, max_panels)
    mid = 0.5 * (plo + phi)
    cuts = np.unique(np.concatenate([plo, mid, phi]))
    return CompositeRule.from_edges(cuts, order)
