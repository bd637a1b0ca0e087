"""Scalar and vector calculus for the p-th power of the p-norm.

The central objects are f(x) = sum_i |x_i|^p, its componentwise derivative
map g(z) = p*sgn(z)*|z|^(p-1), the inverse map h of g, and their
derivatives.  Every solver in this library is built from these maps:
g' exists globally for p >= 2, h' exists globally for 1 < p <= 2, and the
solvers pick whichever is defined on their exponent range.

All functions accept scalars or ndarrays and apply elementwise; scalar
input yields a Python float.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    InvalidInputError,
    SingularPointError,
    UndefinedDerivativeError,
    UnsupportedExponentError,
)

__all__ = [
    "pnorm",
    "pnorm_pow",
    "g_scalar",
    "h_scalar",
    "g_prime",
    "h_prime",
    "pnorm_grad",
    "pnorm_r_hessian",
]


def _check_exponent(p: float) -> float:
    p = float(p)
    if not np.isfinite(p) or p <= 0.0:
        raise UnsupportedExponentError(f"exponent p must be a finite real > 0, got {p}")
    return p


def _require_p_gt1(p: float) -> float:
    p = _check_exponent(p)
    if p <= 1.0:
        raise UnsupportedExponentError(f"operation requires p > 1, got p={p}")
    return p


def _as_finite_array(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.size and not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def _abs_pow(z: np.ndarray, a: float) -> np.ndarray:
    if a == 0.0:
        return np.ones_like(z)
    out = np.zeros_like(z)
    nz = z != 0.0
    if a < 0.0 and not np.all(nz):
        raise SingularPointError("negative power of zero")
    with np.errstate(over="ignore"):  # saturate to inf for astronomical powers
        np.exp(a * np.log(np.abs(z, where=nz, out=np.ones_like(z))), where=nz, out=out)
    return out


def abs_pow(z, a: float):
    """|z|^a with an explicit zero branch: 0^a = 0 for a > 0, 0^0 = 1.

    Computed via exp(a*log|z|) away from zero so non-integer exponents never
    see log(0).
    """
    out = _abs_pow(np.asarray(z, dtype=float), a)
    return out if out.ndim else float(out)


def pnorm_pow(x, p: float) -> float:
    """f(x) = sum_i |x_i|^p for p > 0.  Nonnegative; zero iff x = 0."""
    p = _check_exponent(p)
    arr = _as_finite_array(x)
    return float(np.sum(_abs_pow(arr, p)))


def pnorm(x, p: float) -> float:
    """The p-norm (p >= 1) or p-quasi-norm (0 < p < 1): pnorm_pow(x, p)^(1/p)."""
    return pnorm_pow(x, p) ** (1.0 / _check_exponent(p))


def g_scalar(z, p: float):
    """g(z) = p * sgn(z) * |z|^(p-1), the derivative of |z|^p for p > 1.

    Odd and strictly increasing; g(0) = 0.
    """
    p = _require_p_gt1(p)
    z = _as_finite_array(z, "z")
    out = p * np.sign(z) * _abs_pow(z, p - 1.0)
    return out if out.ndim else float(out)


def h_scalar(z, p: float):
    """Inverse of g for p > 1: h(z) = sgn(z) * |z/p|^(1/(p-1))."""
    p = _require_p_gt1(p)
    z = _as_finite_array(z, "z")
    out = np.sign(z) * _abs_pow(z / p, 1.0 / (p - 1.0))
    return out if out.ndim else float(out)


def g_prime(z, p: float):
    """g'(z) = p(p-1) * |z|^(p-2).

    Globally defined for p >= 2 (constant 2 when p = 2).  For 1 < p < 2 the
    map g is not differentiable at 0, so z = 0 is rejected there.
    """
    p = _require_p_gt1(p)
    z = _as_finite_array(z, "z")
    if p < 2.0 and np.any(z == 0.0):
        raise UndefinedDerivativeError(f"g is not differentiable at 0 for p={p} < 2")
    out = p * (p - 1.0) * _abs_pow(z, p - 2.0)
    return out if out.ndim else float(out)


def h_prime(z, p: float):
    """h'(z) = |z|^((2-p)/(p-1)) / [(p-1) * p^(1/(p-1))] for 1 < p <= 2.

    Globally defined on that range (constant 1/2 when p = 2); other
    exponents are rejected.
    """
    p = _check_exponent(p)
    if not (1.0 < p <= 2.0):
        raise UnsupportedExponentError(f"h_prime requires 1 < p <= 2, got p={p}")
    z = _as_finite_array(z, "z")
    denom = (p - 1.0) * p ** (1.0 / (p - 1.0))
    out = _abs_pow(z, (2.0 - p) / (p - 1.0)) / denom
    return out if out.ndim else float(out)


def pnorm_grad(x, p: float) -> np.ndarray:
    """Gradient of f(x) = sum |x_i|^p: the componentwise g map."""
    p = _require_p_gt1(p)
    arr = _as_finite_array(x)
    return p * np.sign(arr) * _abs_pow(arr, p - 1.0)


def pnorm_r_hessian(x, p: float, r: float) -> np.ndarray:
    """Hessian of ||x||_p^r at nonzero x, for p >= 2 and r >= 1.

    H = (r/p) * ||x||_p^(r-p) * [ Lambda(x)
            + ((r-p) / (p ||x||_p^p)) * grad_f(x) grad_f(x)^T ],

    with Lambda(x) = diag(g'(x_i)).  Positive semi-definite for r >= 1.
    """
    p = _check_exponent(p)
    if p < 2.0:
        raise UnsupportedExponentError(f"pnorm_r_hessian requires p >= 2, got p={p}")
    r = float(r)
    if r < 1.0:
        raise InvalidInputError(f"pnorm_r_hessian requires r >= 1, got r={r}")
    arr = _as_finite_array(x)
    if not np.any(arr):
        raise SingularPointError("Hessian of ||.||_p^r is undefined at x = 0")
    fpow = float(np.sum(_abs_pow(arr, p)))
    lam = p * (p - 1.0) * _abs_pow(arr, p - 2.0)
    grad = p * np.sign(arr) * _abs_pow(arr, p - 1.0)
    core = np.diag(lam) + ((r - p) / (p * fpow)) * np.outer(grad, grad)
    return (r / p) * fpow ** ((r - p) / p) * core
