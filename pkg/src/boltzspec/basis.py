"""Orthonormal polynomial families on [0, inf) for the weights used here.

Three weights are supported:

* ``CHEM_EQ``: the Fermi-Dirac factor ``1/(e^y + 1)`` of the fixed basis,
* ``NON_EQ``: ``z^2 / (e^z/Y + 1)`` with fugacity ``Y``, the adaptive basis,
* ``LAGUERRE``: ``z^p e^-z`` (``p = 2`` is the small-fugacity limit of
  ``NON_EQ``; ``p = 0`` gives the classical Laguerre polynomials).

A :class:`BasisTable` is built with the discretised Stieltjes procedure on a
composite Gauss-Legendre rule, so recurrence coefficients never pass through
monomial moments.  Polynomials are always evaluated through the three-term
recurrence.
"""

from __future__ import annotations

import csv
import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import expit, gammaln

from . import quadrature
from .quadrature import CompositeRule, QuadratureError

ORTHO_TOL = 1e-10


class LossOfOrthogonality(QuadratureError):
    pass


class WeightKind(enum.Enum):
    CHEM_EQ = "chemeq"
    NON_EQ = "noneq"
    LAGUERRE = "laguerre"


@dataclass(frozen=True)
class WeightFamily:
    kind: WeightKind
    upsilon: float = 1.0
    laguerre_power: int = 2

    def __post_init__(self):
        if not self.upsilon > 0:
            raise ValueError(f"fugacity must be positive, got {self.upsilon}")

    @classmethod
    def chem_eq(cls) -> "WeightFamily":
        return cls(WeightKind.CHEM_EQ)

    @classmethod
    def non_eq(cls, upsilon: float) -> "WeightFamily":
        return cls(WeightKind.NON_EQ, upsilon=float(upsilon))

    @classmethod
    def laguerre(cls, power: int = 2) -> "WeightFamily":
        return cls(WeightKind.LAGUERRE, laguerre_power=power)

    @property
    def log_upsilon(self) -> float:
        return math.log(self.upsilon)

    @property
    def decay_rate(self) -> float:
        return 1.0

    @property
    def z_power(self) -> int:
        """Power of z multiplying the exponential tail of the weight."""
        if self.kind is WeightKind.CHEM_EQ:
            return 0
        if self.kind is WeightKind.NON_EQ:
            return 2
        return self.laguerre_power

    def occupation(self, z):
        """The distribution factor of the weight (``w`` without the z power)."""
        z = np.asarray(z, dtype=float)
        if self.kind is WeightKind.CHEM_EQ:
            return expit(-z)
        if self.kind is WeightKind.NON_EQ:
            return expit(self.log_upsilon - z)
        return np.exp(-z)

    def w(self, z):
        z = np.asarray(z, dtype=float)
        p = self.z_power
        occ = self.occupation(z)
        return occ if p == 0 else z**p * occ

    def dw_dupsilon(self, z):
        """d w / d Y = z^2 / (e^{z/2} + Y e^{-z/2})^2."""
        self._require_noneq()
        z = np.asarray(z, dtype=float)
        e = np.exp(-z)
        return z**2 * e / (1.0 + self.upsilon * e) ** 2

    def kinetic_factor(self, z):
        """(z / f) df/dz = -z / (1 + Y e^{-z})."""
        self._require_noneq()
        z = np.asarray(z, dtype=float)
        return -z * expit(z - self.log_upsilon)

    def fugacity_factor(self, z):
        """(Y / f) df/dY = 1 / (1 + Y e^{-z})."""
        self._require_noneq()
        return expit(np.asarray(z, dtype=float) - self.log_upsilon)

    def _require_noneq(self):
        if self.kind is not WeightKind.NON_EQ:
            raise ValueError("only defined for the fugacity-dependent weight")


# ---------------------------------------------------------------------------
# quadrature rules for the weights
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def measure_rule(max_degree: int, slowest_decay: float = 0.5, rel_tol: float = 1e-16) -> CompositeRule:
    """Composite rule for ``poly(deg <= max_degree) * exp(-slowest_decay z)``.

    The cutoff bounds the relative tail of the slowest envelope; panels are
    adapted to a probe family of Fermi-type integrands at several fugacities
    and decay rates, which share the analyticity strip of every integrand the
    solvers produce.
    """
    z_max = quadrature.relative_tail_cutoff(slowest_decay, max_degree, rel_tol)
    degrees = np.arange(0, max_degree + 1, 2, dtype=float)
    log_norms = gammaln(degrees + 1.0)

    def probe(z):
        rows = []
        for rate in sorted({slowest_decay, 1.0}):
            for log_y in (-3.0, 0.0, 2.0):
                occ = expit(log_y - rate * z)
                for d, ln in zip(degrees, log_norms):
                    rows.append(np.exp(d * np.log(np.maximum(z, 1e-300)) - ln + (d + 1) * np.log(rate)) * occ)
        return np.vstack(rows)

    return quadrature.adapted_rule(probe, 0.0, z_max, rel_tol=1e-14, abs_tol=1e-300, order=20, initial_panels=16)


# ---------------------------------------------------------------------------
# basis tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BasisTable:
    """Recurrence data of one orthonormal family at a fixed weight.

    ``alphas[n] = <z p_n, p_n>``, ``betas[n] = <z p_n, p_{n-1}>`` (with
    ``betas[0] = 0``) and ``norms[n] = ||psi_n||`` for the monic ``psi_n``.
    ``deriv_coeffs[n, k]`` holds ``a_n^k`` with ``p_n' = sum_k a_n^k p_k``.
    """

    weight: WeightFamily
    n_modes: int
    alphas: np.ndarray
    betas: np.ndarray
    norms: np.ndarray
    deriv_coeffs: np.ndarray
    upsilon_diag: np.ndarray | None
    rule: CompositeRule = field(repr=False)
    rule_weights: np.ndarray = field(repr=False)
    node_values: np.ndarray = field(repr=False)

    @property
    def mass(self) -> float:
        """<1, 1>."""
        return float(self.norms[0] ** 2)

    @property
    def jacobi(self) -> np.ndarray:
        """Symmetric tridiagonal matrix J[l, k] = <z p_l, p_k>."""
        n = self.n_modes + 1
        J = np.diag(self.alphas[:n])
        off = self.betas[1:n]
        J[np.arange(n - 1), np.arange(1, n)] = off
        J[np.arange(1, n), np.arange(n - 1)] = off
        return J

    def gram(self, factor=None) -> np.ndarray:
        """Matrix of <factor p_i, p_k> on the table's rule."""
        P = self.node_values
        W = self.rule_weights if factor is None else self.rule_weights * factor
        return (P * W) @ P.T

    def project(self, values: np.ndarray) -> np.ndarray:
        """<g, p_k> for ``g`` sampled at the rule nodes."""
        return self.node_values @ (self.rule_weights * values)


def _stieltjes(x: np.ndarray, W: np.ndarray, n_modes: int):
    """Discretised Stieltjes procedure; returns alphas, betas, node values."""
    P = np.empty((n_modes + 1, x.size))
    alphas = np.empty(n_modes + 1)
    betas = np.zeros(n_modes + 2)
    mass = W.sum()
    P[0] = 1.0 / math.sqrt(mass)
    prev = np.zeros_like(x)
    for n in range(n_modes + 1):
        p = P[n]
        alphas[n] = np.dot(W * x, p * p)
        if n == n_modes:
            break
        q = (x - alphas[n]) * p - betas[n] * prev
        betas[n + 1] = math.sqrt(np.dot(W, q * q))
        prev = p
        P[n + 1] = q / betas[n + 1]
    return alphas, betas[: n_modes + 1], P, mass


def _deriv_coeffs(alphas, betas, J) -> np.ndarray:
    """Rows a_n (n = 0..N) of the expansion p_n' = sum_{k<n} a_n^k p_k."""
    n_tot = len(alphas)
    a = np.zeros((n_tot, n_tot))
    for n in range(n_tot - 1):
        row = a[n] @ J - alphas[n] * a[n]
        row[n] += 1.0
        if n > 0:
            row -= betas[n] * a[n - 1]
        a[n + 1] = row / betas[n + 1]
    return a


def build_basis(weight: WeightFamily, n_modes: int, rule: CompositeRule | None = None, verify: bool = True) -> BasisTable:
    """Orthonormal polynomials of degree 0..n_modes for ``weight``.

    Raises :class:`LossOfOrthogonality` when the rule-based Gram matrix
    deviates from the identity by more than 1e-10.
    """
    if n_modes < 0:
        raise ValueError("n_modes must be non-negative")
    if rule is None:
        rule = measure_rule(2 * n_modes + 4)
    x = rule.nodes
    W = rule.weights * weight.w(x)
    alphas, betas, P, mass = _stieltjes(x, W, n_modes)
    norms = math.sqrt(mass) * np.cumprod(np.concatenate([[1.0], betas[1:]]))
    table_J = np.diag(alphas)
    idx = np.arange(n_modes)
    table_J[idx, idx + 1] = betas[1:]
    table_J[idx + 1, idx] = betas[1:]
    a = _deriv_coeffs(alphas, betas, table_J)

    if weight.kind is WeightKind.NON_EQ:
        dW = rule.weights * weight.dw_dupsilon(x)
        ups_diag = -0.5 * np.einsum("ij,j,ij->i", P, dW, P)
    else:
        ups_diag = None

    table = BasisTable(
        weight=weight,
        n_modes=n_modes,
        alphas=alphas,
        betas=betas,
        norms=norms,
        deriv_coeffs=a,
        upsilon_diag=ups_diag,
        rule=rule,
        rule_weights=W,
        node_values=P,
    )
    if verify:
        dev = np.abs(table.gram() - np.eye(n_modes + 1)).max()
        if dev > ORTHO_TOL:
            raise LossOfOrthogonality(f"max |<p_i,p_j> - delta_ij| = {dev:.3g}")
    return table


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def eval_polys(table: BasisTable, z) -> np.ndarray:
    """Values p_0(z) .. p_N(z); shape (N+1,) + shape(z)."""
    z = np.asarray(z, dtype=float)
    out = np.empty((table.n_modes + 1,) + z.shape)
    out[0] = 1.0 / table.norms[0]
    if table.n_modes >= 1:
        out[1] = (z - table.alphas[0]) * out[0] / table.betas[1]
    for n in range(1, table.n_modes):
        out[n + 1] = ((z - table.alphas[n]) * out[n] - table.betas[n] * out[n - 1]) / table.betas[n + 1]
    return out


def eval_poly_derivs(table: BasisTable, z) -> np.ndarray:
    """Derivatives p_n'(z) from the differentiated recurrence."""
    z = np.asarray(z, dtype=float)
    vals = eval_polys(table, z)
    out = np.zeros_like(vals)
    if table.n_modes >= 1:
        out[1] = vals[0] / table.betas[1]
    for n in range(1, table.n_modes):
        out[n + 1] = (vals[n] + (z - table.alphas[n]) * out[n] - table.betas[n] * out[n - 1]) / table.betas[n + 1]
    return out


def derivative_coeffs(table: BasisTable) -> np.ndarray:
    return table.deriv_coeffs


def upsilon_diag_derivs(table: BasisTable) -> np.ndarray:
    """<p_n, dp_n/dY> = -1/2 int p_n^2 dw/dY dz, n = 0..N."""
    if table.upsilon_diag is None:
        raise ValueError("fugacity derivatives need the fugacity-dependent weight")
    return table.upsilon_diag


def gauss_rule(table: BasisTable, n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes and weights for the table's weight (Golub-Welsch)."""
    if not 1 <= n_points <= table.n_modes + 1:
        raise ValueError(f"n_points must lie in [1, {table.n_modes + 1}]")
    nodes, vecs = linalg.eigh_tridiagonal(table.alphas[:n_points], table.betas[1:n_points])
    weights = table.mass * vecs[0] ** 2
    return nodes, weights


def expand_function(table: BasisTable, g, n_modes: int | None = None, decay_rate: float = 0.5,
                    rel_tol: float = 1e-13, abs_tol: float = 1e-15) -> np.ndarray:
    """Coefficients c_k = <g, p_k>, k < n_modes, by adaptive quadrature.

    ``g * w`` may decay more slowly than the weight itself (down to
    ``exp(-decay_rate z)``), which is why the table's own rule is not used.
    """
    n = table.n_modes + 1 if n_modes is None else n_modes
    if n > table.n_modes + 1:
        raise ValueError("table has too few modes")
    degree = n + table.weight.z_power + 2

    def integrand(z):
        return eval_polys(table, z)[:n] * (np.asarray(g(z)) * table.weight.w(z))

    res = quadrature.integrate_semi_infinite(
        integrand, rel_tol=rel_tol, abs_tol=abs_tol, decay_rate=decay_rate, poly_degree=degree
    )
    return np.atleast_1d(res.value)


def partial_sum(table: BasisTable, coeffs: np.ndarray, z) -> np.ndarray:
    """sum_k coeffs[k] p_k(z)."""
    vals = eval_polys(table, z)
    return np.tensordot(coeffs, vals[: len(coeffs)], axes=1)


def chem_eq_norm_diverges(reheat_ratio: float) -> bool:
    """Whether f_Y / f_ch leaves L^2(f_ch dy).

    The squared-norm integrand behaves like Y^2 exp(y (1 - 2/R)) at large y,
    which is integrable only for R < 2.
    """
    return reheat_ratio >= 2.0


def chem_eq_norm_integrand(y, upsilon: float, reheat_ratio: float):
    """(e^y + 1) / (e^{y/R}/Y + 1)^2, the squared-norm density of f_Y / f_ch."""
    y = np.asarray(y, dtype=float)
    fy = expit(math.log(upsilon) - y / reheat_ratio)
    return fy**2 / expit(-y)


def dump_csv(table: BasisTable, path) -> None:
    """Write alphas, betas, norms and the derivative coefficients."""
    n = table.n_modes + 1
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["n", "alpha", "beta", "norm"] + [f"a_n^{k}" for k in range(n)])
        for i in range(n):
            wr.writerow([i, repr(float(table.alphas[i])), repr(float(table.betas[i])),
                         repr(float(table.norms[i]))] + [repr(float(v)) for v in table.deriv_coeffs[i]])
