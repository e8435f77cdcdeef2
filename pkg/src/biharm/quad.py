"""Double-exponential quadrature of the one-dimensional kernel integrals and
the t-parameterized polynomial factors of the tensor-product basis.

The substitution t = Phi(u) maps the half-line integrals onto the real line
with doubly exponentially decaying integrands, so the plain trapezoidal rule
with a few hundred nodes reaches near machine accuracy.  Node tables are
immutable; log-magnitude companions of every node quantity are kept because
the high-dimensional assembly must form n-fold products in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import QuadratureDivergence
from .kernels import dim_value, order_value

__all__ = [
    "DEQuadrature",
    "DENode",
    "de_transform",
    "qm_poly",
    "rm_poly",
    "integral_phi2",
    "tensor_weight",
]

_LOG_FLOAT_MAX = 709.0

# Tail contributions are compared against this fraction of the accumulated sum.
_TAIL_TOL = 1e-16


@dataclass(frozen=True)
class DENode:
    """One trapezoidal node after the double-exponential substitution.

    weight is the t*dt measure element tau * Phi(u) * Phi'(u); damp is the
    per-dimension factor (1 + t)^{-1/2}.
    """

    u: float
    t: float
    weight: float
    damp: float


def _log_transform(u, a: float, b: float):
    """Return (log Phi(u), log Phi'(u)) elementwise; never overflows."""
    u = np.asarray(u, dtype=float)
    inner = b * (u - np.exp(-u))
    log_t = a * b * (u - np.exp(-u)) + a * np.exp(inner)
    # log(1 + e^inner) without overflow for large positive inner
    log_tprime = log_t + math.log(a * b) + np.log1p(np.exp(-u)) + np.logaddexp(0.0, inner)
    return log_t, log_tprime


def de_transform(u: float, a: float, b: float) -> tuple[float, float]:
    """Substitution t = Phi(u) and its derivative.

    Phi(u) = exp(ab(u - e^{-u}) + a exp(b(u - e^{-u}))),
    Phi'(u) = Phi(u) ab (1 + e^{-u}) (1 + exp(b(u - e^{-u}))).

    Values beyond the binary64 range are clamped to +inf; callers must treat
    such nodes as zero-contribution after damping.
    """
    log_t, log_tprime = _log_transform(u, a, b)
    t = math.exp(log_t) if log_t <= _LOG_FLOAT_MAX else math.inf
    tprime = math.exp(log_tprime) if log_tprime <= _LOG_FLOAT_MAX else math.inf
    return t, tprime


@dataclass(frozen=True)
class DEQuadrature:
    """Trapezoidal rule of step tau at nodes u_s = tau * s, s_begin <= s < s_end."""

    a: float = 6.0
    b: float = 5.0
    tau: float = 0.003
    s_begin: int = 0
    s_end: int = 300
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (self.a > 0.0 and self.b > 0.0 and self.tau > 0.0):
            raise ValueError("quadrature parameters a, b, tau must be positive")
        if self.s_begin >= self.s_end:
            raise ValueError("node index range must be nonempty")

    @property
    def node_count(self) -> int:
        return self.s_end - self.s_begin

    def arrays(self):
        """Node table as arrays: (u, t, log_t, log_weight, weight, damp).

        weight = tau * Phi * Phi' (may be +inf); log_weight is always finite.
        Cached; treat the returned arrays as read-only.
        """
        if "arrays" not in self._cache:
            u = self.tau * np.arange(self.s_begin, self.s_end, dtype=float)
            log_t, log_tprime = _log_transform(u, self.a, self.b)
            with np.errstate(over="ignore"):
                t = np.exp(log_t)
            log_weight = math.log(self.tau) + log_t + log_tprime
            with np.errstate(over="ignore"):
                weight = np.exp(log_weight)
            damp = np.exp(-0.5 * np.log1p(t))
            damp[~np.isfinite(t)] = 0.0
            self._cache["arrays"] = (u, t, log_t, log_weight, weight, damp)
        return self._cache["arrays"]

    def nodes(self) -> list[DENode]:
        u, t, _, _, weight, damp = self.arrays()
        return [DENode(float(ui), float(ti), float(wi), float(di))
                for ui, ti, wi, di in zip(u, t, weight, damp)]


DEFAULT_RULE = DEQuadrature()


def _poly_weights(M: int, t) -> tuple[np.ndarray, list]:
    """Common scaled argument and coefficients (-1)^k/(k! 4^k) (1+t)^{-k}."""
    t = np.asarray(t, dtype=float)
    coeffs = []
    c = np.ones_like(t)
    for k in range(M):
        coeffs.append(c.copy())
        c = -c / ((k + 1.0) * 4.0 * (1.0 + t))
    return t, coeffs


def qm_poly(M, x, t):
    """Q_M(x, t) = sum_{k<M} (-1)^k/(k! 4^k) (1+t)^{-k} H_{2k}(x / sqrt(1+t))."""
    M = order_value(M)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0 and np.ndim(t) == 0
    t, coeffs = _poly_weights(M, t)
    y = x / np.sqrt(1.0 + t)
    h_prev = np.ones_like(y)  # H_0
    total = coeffs[0] * h_prev
    if M > 1:
        h = 2.0 * y
        for k in range(1, M):
            h, h_prev = 2.0 * y * h - 2.0 * (2 * k - 1) * h_prev, h  # -> H_2k
            total = total + coeffs[k] * h
            if k < M - 1:
                h, h_prev = 2.0 * y * h - 2.0 * (2 * k) * h_prev, h  # -> H_{2k+1}
    return float(total) if scalar else total


def rm_poly(M, x, t):
    """R_M(x, t) = sum_{k<M} (-1)^k/(k! 4^k) (1+t)^{-k} S_{2k}(x / sqrt(1+t))
    with S_k(y) = y^2 H_k(y) - 2k y H_{k-1}(y) + k(k-1) H_{k-2}(y)."""
    M = order_value(M)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0 and np.ndim(t) == 0
    t, coeffs = _poly_weights(M, t)
    y = x / np.sqrt(1.0 + t)
    y2 = y * y
    # rolling window of H_{j-2}, H_{j-1}, H_j
    h2, h1, h = None, None, np.ones_like(y)
    total = coeffs[0] * y2  # S_0(y) = y^2
    j = 0
    for k in range(1, M):
        for _ in range(2):
            j += 1
            h2, h1, h = h1, h, 2.0 * y * h - 2.0 * (j - 1) * (h1 if h1 is not None else 0.0)
        s = y2 * h - 2.0 * j * y * h1 + j * (j - 1.0) * h2
        total = total + coeffs[k] * s
    return float(total) if scalar else total


def integral_phi2(n, r: float, rule: DEQuadrature = DEFAULT_RULE) -> float:
    """Potential of the unit Gaussian at radius r via the one-dimensional
    integral representation, evaluated with the given quadrature rule.

    For n >= 5 this is (1/16) int_0^inf e^{-r^2/(1+t)} (1+t)^{-n/2} t dt;
    for n = 3 the two-term counterpart with an extra t r^2 (1+t)^{-5/2} piece.
    """
    n = dim_value(n)
    if n == 4:
        raise ValueError("the integral representation covers n = 3 and n >= 5 only")
    _, t, log_t, log_weight, _, _ = rule.arrays()
    r2 = float(r) * float(r)
    log1pt = np.log1p(t)
    log1pt[~np.isfinite(t)] = log_t[~np.isfinite(t)]
    if n >= 5:
        # tau * Phi * Phi' * e^{-r^2/(1+t)} (1+t)^{-n/2}, all in log form
        expo = log_weight - r2 * np.exp(-log1pt) - 0.5 * n * log1pt
        contrib = np.where(expo > -745.0, np.exp(np.minimum(expo, 700.0)), 0.0)
        total = math.fsum(contrib) / 16.0
        tail = contrib[-1] / 16.0
    else:
        # tau * Phi' * e^{-r^2/(1+t)} [(1+t)^{-3/2} + t r^2 (1+t)^{-5/2}]
        log_phiprime = log_weight - log_t  # log(tau * Phi') = log_weight - log Phi
        base = log_phiprime - r2 * np.exp(-log1pt)
        first = np.where(base - 1.5 * log1pt > -745.0, np.exp(base - 1.5 * log1pt), 0.0)
        second_expo = base + log_t - 2.5 * log1pt
        second = np.where(second_expo > -745.0, r2 * np.exp(second_expo), 0.0)
        contrib = first + second
        total = -math.fsum(contrib) / 8.0
        tail = -contrib[-1] / 8.0
    if abs(tail) > _TAIL_TOL * abs(total):
        raise QuadratureDivergence(
            f"final-node contribution {tail:.3e} exceeds {_TAIL_TOL:.0e} of the "
            f"accumulated value {total:.3e}; extend the node range"
        )
    return total


def tensor_weight(k, M, D: float, rule: DEQuadrature = DEFAULT_RULE, n=None) -> float:
    """Cubature weight of the tensor-product basis at lattice offset k.

    a_k^(M) = (pi D)^{-n/2} tau sum_s Phi Phi' (1+t)^{-n/2}
              prod_j e^{-k_j^2/(D(1+t))} Q_M(k_j / sqrt(D), t).
    """
    k = np.asarray(k, dtype=float)
    if k.ndim != 1:
        raise ValueError("k must be a flat index vector")
    n = dim_value(len(k) if n is None else n)
    if n < 5:
        raise ValueError("tensor weights are defined for n >= 5")
    if len(k) != n:
        raise ValueError("index vector length must equal the dimension")
    M = order_value(M)
    if not D > 0.0:
        raise ValueError("shape parameter D must be positive")
    _, t, log_t, log_weight, _, _ = rule.arrays()
    log1pt = np.log1p(t)
    log1pt[~np.isfinite(t)] = log_t[~np.isfinite(t)]
    inv1pt = np.exp(-log1pt)
    # per-node product over dimensions, in log-magnitude/sign form
    q = qm_poly(M, k[:, None] / math.sqrt(D), t[None, :])
    gauss_expo = -(k * k)[:, None] / D * inv1pt[None, :]
    sign = np.prod(np.sign(q), axis=0)
    with np.errstate(divide="ignore"):
        log_prod = np.sum(gauss_expo + np.log(np.abs(q)), axis=0)
    expo = log_weight - 0.5 * n * log1pt + log_prod
    contrib = np.where(expo > -745.0, sign * np.exp(np.minimum(expo, 700.0)), 0.0)
    total = math.fsum(contrib)
    tail = contrib[-1]
    if abs(tail) > _TAIL_TOL * abs(total):
        raise QuadratureDivergence(
            f"final-node contribution {tail:.3e} exceeds {_TAIL_TOL:.0e} of the "
            f"accumulated value {total:.3e}; extend the node range"
        )
    return total * (math.pi * D) ** (-0.5 * n)
