"""Symmetric kernels, smoothing kernels and the localized kernel families.

All kernels are vectorized over a batch of ``T`` argument tuples. A kernel
of order ``r`` is called as ``h(xs, vs)`` with ``xs`` of shape ``(T, r, m)``
(covariates) and ``vs`` of shape ``(T, r, p)`` (payloads) and returns an
array of shape ``(T,)``. Base kernels ``phi`` see payloads only.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ujack.errors import InvalidParameter

DEFAULT_SIMPLEX_TOL = 1e-10


@dataclass(frozen=True)
class SymmetricKernel:
    """Order-``r`` kernel, symmetric under permutations of its arguments."""

    order: int
    func: Callable = field(repr=False)
    label: str = "h"

    def __call__(self, xs, vs):
        return np.asarray(self.func(xs, vs), dtype=float)

    def evaluate(self, *observations):
        """Scalar evaluation on ``order`` :class:`~ujack.sample.Observation` s."""
        if len(observations) != self.order:
            raise InvalidParameter(f"{self.label} takes {self.order} arguments")
        if self.order == 0:
            return float(self(np.zeros((1, 0, 1)), np.zeros((1, 0, 1)))[0])
        xs = np.array([o.x for o in observations], dtype=float)[None]
        vs = np.array([o.v for o in observations], dtype=float)[None]
        return float(self(xs, vs)[0])


@dataclass(frozen=True)
class BaseKernel:
    """Symmetric base function ``phi`` of ``order`` payloads."""

    order: int
    func: Callable = field(repr=False)
    label: str = "phi"

    def __call__(self, vs):
        return np.asarray(self.func(vs), dtype=float)

    def negated(self):
        return BaseKernel(self.order, lambda vs: -self.func(vs), f"-{self.label}")

    def as_kernel(self):
        return SymmetricKernel(self.order, lambda xs, vs: self(vs), self.label)


@dataclass(frozen=True)
class SmoothingKernel:
    """Kernel ``L`` on ``R^m`` supported in the box ``[-1, 1]^m``."""

    name: str
    func: Callable = field(repr=False)
    support_radius: float = 1.0

    def __call__(self, u):
        """Evaluate ``L(u)`` for ``u`` of shape ``(..., m)``."""
        return np.asarray(self.func(np.asarray(u, dtype=float)), dtype=float)

    def scaled(self, u, b):
        """``L_b(u) = b^{-m} L(u / b)``."""
        u = np.asarray(u, dtype=float)
        m = u.shape[-1]
        return self(u / b) / b**m


def _epanechnikov(u):
    inside = np.all(np.abs(u) <= 1.0, axis=-1)
    val = np.prod(0.75 * (1.0 - u * u), axis=-1)
    return np.where(inside, val, 0.0)


def _uniform(u):
    m = u.shape[-1]
    inside = np.all(np.abs(u) <= 1.0, axis=-1)
    return np.where(inside, 0.5**m, 0.0)


def epanechnikov():
    """``L(u) = 0.75 (1 - u^2)`` on ``[-1, 1]``; product form when ``m > 1``."""
    return SmoothingKernel("epanechnikov", _epanechnikov)


def uniform():
    """``L = 2^{-m}`` on the box ``[-1, 1]^m``."""
    return SmoothingKernel("uniform", _uniform)


SMOOTHING_KERNELS = {"epanechnikov": epanechnikov, "uniform": uniform}


def smoothing_kernel(name):
    try:
        return SMOOTHING_KERNELS[name]()
    except KeyError:
        raise InvalidParameter(
            f"unknown smoothing kernel {name!r}; valid: {', '.join(SMOOTHING_KERNELS)}"
        ) from None


def sign(t):
    """Three-valued sign with ``sign(0) = 0``; works on scalars and arrays."""
    out = (np.asarray(t) > 0).astype(float) - (np.asarray(t) < 0).astype(float)
    if np.ndim(out) == 0:
        return int(out)
    return out


def gsv_base_kernel():
    """Monotonicity kernel ``sign(y_j - y_i) sign(x_i - x_j)`` on payloads ``(x, y)``."""

    def phi(vs):
        if vs.shape[-1] != 2:
            raise InvalidParameter("gsv kernel needs payload (x, y) with m = 1")
        x, y = vs[:, :, 0], vs[:, :, -1]
        return sign(y[:, 1] - y[:, 0]) * sign(x[:, 0] - x[:, 1])

    return BaseKernel(2, phi, "gsv")


def llw_base_kernel(y_threshold):
    """Local Kendall's tau kernel ``{1(y_i <= t) - 1(y_j <= t)} sign(x_i - x_j)``."""
    t = float(y_threshold)

    def phi(vs):
        if vs.shape[-1] != 2:
            raise InvalidParameter("llw kernel needs payload (x, y) with m = 1")
        x, y = vs[:, :, 0], vs[:, :, -1]
        ind = (y <= t).astype(float)
        return (ind[:, 0] - ind[:, 1]) * sign(x[:, 0] - x[:, 1])

    return BaseKernel(2, phi, f"llw[y={t!r}]")


def _simplex_weights_1d(xs, tol):
    """Fast path of :func:`simplex_weights` for ``m = 1`` (three points)."""
    pts = xs[:, :, 0]
    order = np.argsort(pts, axis=1, kind="stable")
    srt = np.take_along_axis(pts, order, axis=1)
    lo, mid, hi = srt[:, 0], srt[:, 1], srt[:, 2]
    span = hi - lo
    ok = span > tol
    with np.errstate(divide="ignore", invalid="ignore"):
        a_lo = np.where(ok, (hi - mid) / np.where(ok, span, 1.0), 0.0)
    a_hi = 1.0 - a_lo
    ok &= (a_lo > tol) & (a_lo < 1 - tol) & (a_hi > tol) & (a_hi < 1 - tol)
    j = np.where(ok, order[:, 1], -1)
    # weights listed over the remaining indices in increasing original order
    first_is_lo = order[:, 0] < order[:, 2]
    a = np.where(first_is_lo[:, None], np.column_stack([a_lo, a_hi]), np.column_stack([a_hi, a_lo]))
    a = np.where(ok[:, None], a, np.nan)
    return j, a


def _simplex_weights_general(xs, tol):
    T, k, m = xs.shape
    j_out = np.full(T, -1)
    a_out = np.full((T, m + 1), np.nan)
    for j in range(k):
        others = np.delete(xs, j, axis=1)  # (T, m+1, m)
        diff = others[:, 1:, :] - others[:, :1, :]  # (T, m, m)
        smin = np.linalg.svd(diff, compute_uv=False)[:, -1]
        indep = smin > tol
        A = np.concatenate([np.swapaxes(others, 1, 2), np.ones((T, 1, m + 1))], axis=1)
        rhs = np.concatenate([xs[:, j, :], np.ones((T, 1))], axis=1)
        A_safe = np.where(indep[:, None, None], A, np.eye(m + 1))
        a = np.linalg.solve(A_safe, rhs[:, :, None])[:, :, 0]
        inside = indep & np.all((a > tol) & (a < 1 - tol), axis=1) & (j_out < 0)
        j_out = np.where(inside, j, j_out)
        a_out = np.where(inside[:, None], a, a_out)
    return j_out, a_out


def simplex_weights(xs, tol=DEFAULT_SIMPLEX_TOL):
    """Batched barycentric classification of ``m + 2`` points in ``R^m``.

    Returns ``(j, a)`` with ``j`` of shape ``(T,)`` (``-1`` when the tuple is
    not in the simplex configuration set) and ``a`` of shape ``(T, m + 1)``
    holding the weights of the other points in increasing index order.
    """
    xs = np.asarray(xs, dtype=float)
    T, k, m = xs.shape
    if k != m + 2:
        raise InvalidParameter(f"need m + 2 = {m + 2} points, got {k}")
    if T == 0:
        return np.zeros(0, dtype=int), np.zeros((0, m + 1))
    if m == 1:
        return _simplex_weights_1d(xs, tol)
    return _simplex_weights_general(xs, tol)


def simplex_membership(points, tol=DEFAULT_SIMPLEX_TOL):
    """Locate the point lying strictly inside the simplex spanned by the others.

    Parameters
    ----------
    points : array_like, shape (m + 2, m) or (m + 2,) when m = 1
    tol : float
        Interior margin for the weights and threshold on the smallest
        singular value of the difference matrix of the other points.

    Returns
    -------
    (j, a) or None
        ``j`` is the 0-based index of the interior point and ``a`` the
        barycentric weights of the remaining points in index order.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if not tol > 0:
        raise InvalidParameter("tol must be positive")
    j, a = simplex_weights(pts[None], tol)
    if j[0] < 0:
        return None
    return int(j[0]), a[0].copy()


def simplex_w(vs, tol=DEFAULT_SIMPLEX_TOL):
    """Interpolation error ``sum_{i != j} a_i y_i - y_j`` and membership mask."""
    xs = vs[:, :, :-1]
    y = vs[:, :, -1]
    j, a = simplex_weights(xs, tol)
    inside = j >= 0
    T, k = y.shape
    jj = np.where(inside, j, 0)
    mask = np.ones((T, k), dtype=bool)
    mask[np.arange(T), jj] = False
    y_others = y[mask].reshape(T, k - 1)
    w = np.einsum("ti,ti->t", np.where(inside[:, None], a, 0.0), y_others) - y[np.arange(T), jj]
    return np.where(inside, w, 0.0), inside


def canonical_order(vs):
    """Sort each tuple's arguments lexicographically by payload.

    Makes floating-point evaluation independent of argument order, so
    symmetry holds exactly rather than up to rounding.
    """
    T, k, p = vs.shape
    order = np.broadcast_to(np.arange(k), (T, k))
    for c in reversed(range(p)):
        key = np.take_along_axis(vs[:, :, c], order, axis=1)
        order = np.take_along_axis(order, np.argsort(key, axis=1, kind="stable"), axis=1)
    return np.take_along_axis(vs, order[:, :, None], axis=1)


def aw_base_kernel(mode="sign", m=None, tol=DEFAULT_SIMPLEX_TOL):
    """Simplex kernel of order ``m + 2`` on payloads ``(x_1..x_m, y)``.

    ``mode="sign"`` returns ``1{in D} sign(w)``; ``mode="raw"`` returns
    ``1{in D} w``.
    """
    if mode not in ("sign", "raw"):
        raise InvalidParameter(f"aw mode must be 'sign' or 'raw', got {mode!r}")
    m = 1 if m is None else int(m)

    def phi(vs):
        if vs.shape[-1] != m + 1 or vs.shape[1] != m + 2:
            raise InvalidParameter(f"aw kernel expects {m + 2} payloads of length {m + 1}")
        w, inside = simplex_w(canonical_order(vs), tol)
        out = sign(w) if mode == "sign" else w
        return np.where(inside, out, 0.0)

    return BaseKernel(m + 2, phi, f"aw-{mode}")


@dataclass(frozen=True)
class LocalKernelSpec:
    """Base kernel localized at ``design_point`` with bandwidth ``bandwidth``.

    The composed kernel is ``phi(v_1..v_r) * prod_k L_b(x - x_k)`` and
    vanishes unless every ``|x - x_k|_inf <= b``.
    """

    base: BaseKernel
    smoothing: SmoothingKernel
    design_point: tuple
    bandwidth: float

    def __post_init__(self):
        if not (self.bandwidth > 0 and np.isfinite(self.bandwidth)):
            raise InvalidParameter(f"bandwidth must be positive, got {self.bandwidth!r}")
        object.__setattr__(
            self, "design_point", tuple(float(t) for t in np.atleast_1d(self.design_point))
        )

    @property
    def order(self):
        return self.base.order

    @property
    def m(self):
        return len(self.design_point)

    @property
    def label(self):
        return f"{self.base.label}@x={list(self.design_point)},b={self.bandwidth!r}"

    def weights(self, X):
        """``L_b(x - X_i)`` for covariates ``X`` of shape ``(..., m)``."""
        x = np.asarray(self.design_point)
        return self.smoothing.scaled(x - np.asarray(X, dtype=float), self.bandwidth)

    def in_box(self, X):
        x = np.asarray(self.design_point)
        reach = self.bandwidth * self.smoothing.support_radius
        return np.all(np.abs(np.asarray(X, dtype=float) - x) <= reach, axis=-1)

    def __call__(self, xs, vs):
        return self.base(vs) * np.prod(self.weights(xs), axis=1)

    def as_kernel(self):
        return SymmetricKernel(self.order, self.__call__, self.label)


def base_kernel(method, m=1, y_threshold=None):
    """Base kernel by CLI identifier: gsv, llw, aw-sign, aw-raw."""
    if method == "gsv":
        return gsv_base_kernel()
    if method == "llw":
        if y_threshold is None:
            raise InvalidParameter("llw needs a y threshold")
        return llw_base_kernel(y_threshold)
    if method in ("aw-sign", "aw-raw"):
        return aw_base_kernel(method[3:], m=m)
    raise InvalidParameter(f"unknown method {method!r}; valid methods: {', '.join(METHODS)}")


METHODS = ("gsv", "llw", "aw-sign", "aw-raw")


def method_order(method, m=1):
    if method in ("gsv", "llw"):
        return 2
    if method in ("aw-sign", "aw-raw"):
        return m + 2
    raise InvalidParameter(f"unknown method {method!r}; valid methods: {', '.join(METHODS)}")
