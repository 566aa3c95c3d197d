"""Dense-matrix numerics: matrix exponential, Simpson quadrature, RK4, spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AsymmetricMatrixError, DimensionError, GridRangeError, NumericalBlowup

# Relative tolerance for deciding that a span is an integer number of steps.
_GRID_CLOSE_RTOL = 1e-9
SYMMETRY_RTOL = 1e-9


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float array."""
    m = np.array(a, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def as_vector(a, size: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.array(a, dtype=float).reshape(-1)
    if size is not None and v.shape[0] != size:
        raise DimensionError(f"{name} must have {size} entries, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def _square(M, name: str = "matrix") -> np.ndarray:
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


@dataclass(frozen=True)
class IntegrationGrid:
    """Uniform time grid ``t_start, t_start + step, ..., t_end``."""

    t_start: float
    t_end: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if not self.t_end > self.t_start:
            raise ValueError("grid requires t_end > t_start")
        ratio = (self.t_end - self.t_start) / self.step
        if abs(ratio - round(ratio)) > _GRID_CLOSE_RTOL * max(1.0, ratio):
            raise ValueError(
                f"span {self.t_end - self.t_start} is not a whole number of steps of {self.step}"
            )

    @property
    def intervals(self) -> int:
        return int(round((self.t_end - self.t_start) / self.step))

    def __len__(self) -> int:
        return self.intervals + 1

    @property
    def nodes(self) -> np.ndarray:
        return self.t_start + self.step * np.arange(self.intervals + 1)

    def index_of(self, t: float) -> int:
        """Index of the grid node at ``t``; raises if ``t`` is off-grid or outside."""
        k = (t - self.t_start) / self.step
        idx = int(round(k))
        if abs(k - idx) > 1e-6 or idx < 0 or idx > self.intervals:
            raise GridRangeError(
                f"t = {t} is not a node of the grid [{self.t_start}, {self.t_end}] step {self.step}"
            )
        return idx

    def window(self, t: float, delta: float) -> tuple[int, int]:
        """Node index range ``(i0, i1)`` covering ``[t, t + delta]``."""
        i0 = self.index_of(t)
        try:
            i1 = self.index_of(t + delta)
        except GridRangeError:
            raise GridRangeError(
                f"window [{t}, {t + delta}] is not inside grid [{self.t_start}, {self.t_end}]"
            ) from None
        if i1 <= i0:
            raise ValueError("window length must be positive")
        return i0, i1


def nilpotency_index(M: np.ndarray) -> int | None:
    """Smallest k with M**k == 0 exactly, or None if M is not nilpotent."""
    n = M.shape[0]
    if not M.any():
        return 1
    P = M
    for k in range(2, n + 1):
        P = P @ M
        if not P.any():
            return k
    return None


def _taylor(X: np.ndarray, order: int) -> np.ndarray:
    n = X.shape[0]
    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, order + 1):
        term = term @ X / k
        E = E + term
    return E


def mat_exp(M, t: float = 1.0) -> np.ndarray:
    """``exp(M t)`` by scaling and squaring.

    Nilpotent arguments are detected first and summed exactly as a finite
    power series.
    """
    M = _square(M)
    X = M * t
    k = nilpotency_index(X)
    if k is not None:
        return _taylor(X, k - 1)
    norm = np.linalg.norm(X, 1)
    s = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    # ||X / 2^s|| <= 0.5, so 18 Taylor terms reach ~1e-22 truncation.
    E = _taylor(X / 2.0**s, 18)
    for _ in range(s):
        E = E @ E
    return E


def exp_on_uniform_offsets(M, dt: float, count: int) -> np.ndarray:
    """Stack ``exp(M * j * dt)`` for ``j = 0 .. count - 1``, shape (count, n, n)."""
    M = _square(M)
    n = M.shape[0]
    taus = dt * np.arange(count)
    k = nilpotency_index(M)
    if k is not None:
        out = np.broadcast_to(np.eye(n), (count, n, n)).copy()
        P = np.eye(n)
        for j in range(1, k):
            P = P @ M / j
            out += taus[:, None, None] ** j * P
        return out
    step = mat_exp(M, dt)
    out = np.empty((count, n, n))
    out[0] = np.eye(n)
    for j in range(1, count):
        out[j] = out[j - 1] @ step
    return out


def simpson_weights(intervals: int, h: float) -> np.ndarray:
    """Composite Simpson weights on ``intervals + 1`` equally spaced nodes.

    An odd interval count closes with Simpson's 3/8 rule on the last three
    intervals; a single interval falls back to the trapezoid rule.
    """
    if intervals < 1:
        raise ValueError("need at least one interval")
    w = np.zeros(intervals + 1)
    if intervals == 1:
        w[:] = h / 2
        return w
    even = intervals if intervals % 2 == 0 else intervals - 3
    if even > 0:
        w[0:even + 1:2] += 2.0
        w[1:even:2] += 4.0
        w[0] -= 1.0
        w[even] -= 1.0
        w[: even + 1] *= h / 3
    if even != intervals:
        w[even:] += 3 * h / 8 * np.array([1.0, 3.0, 3.0, 1.0])
    return w


def integrate_samples(values: np.ndarray, h: float) -> np.ndarray:
    """Simpson integral of samples stacked along axis 0."""
    values = np.asarray(values, dtype=float)
    w = simpson_weights(values.shape[0] - 1, h)
    return np.tensordot(w, values, axes=(0, 0))


def integrate_matrix(f: Callable[[float], np.ndarray], grid: IntegrationGrid) -> np.ndarray:
    """Composite Simpson approximation of the integral of ``f`` over ``grid``."""
    samples = []
    shape = None
    for t in grid.nodes:
        v = np.atleast_2d(np.asarray(f(t), dtype=float))
        if shape is None:
            shape = v.shape
        elif v.shape != shape:
            raise DimensionError(f"integrand changed shape from {shape} to {v.shape} at t = {t}")
        samples.append(v)
    return integrate_samples(np.stack(samples), grid.step)


def cumulative_simpson(nodes: np.ndarray, mids: np.ndarray, h: float) -> np.ndarray:
    """Running integral at each node from per-interval Simpson with midpoints.

    ``nodes`` has N + 1 samples, ``mids`` the N interval midpoints; returns
    N + 1 partial integrals starting at zero.
    """
    nodes = np.asarray(nodes, dtype=float)
    mids = np.asarray(mids, dtype=float)
    if mids.shape[0] != nodes.shape[0] - 1:
        raise DimensionError("need exactly one midpoint per interval")
    pieces = h / 6.0 * (nodes[:-1] + 4.0 * mids + nodes[1:])
    out = np.zeros_like(nodes)
    np.cumsum(pieces, axis=0, out=out[1:])
    return out


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, x: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``x' = f(t, x)``."""
    if not h > 0:
        raise ValueError("step must be positive")
    k1 = f(t, x)
    k2 = f(t + h / 2, x + h / 2 * k1)
    k3 = f(t + h / 2, x + h / 2 * k2)
    k4 = f(t + h, x + h * k3)
    out = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowup(t + h)
    return out


def symmetrize(M, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Return ``(M + M.T) / 2`` after checking asymmetry is within ``rtol``."""
    M = _square(M)
    scale = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > rtol * scale:
        raise AsymmetricMatrixError(
            f"matrix asymmetry {np.linalg.norm(M - M.T):.3e} exceeds {rtol:g} * ||M||_F"
        )
    return 0.5 * (M + M.T)


def min_eig_sym(M) -> float:
    """Smallest eigenvalue of the symmetric part of ``M``."""
    return float(np.linalg.eigvalsh(symmetrize(M))[0])


def numerical_rank(M, tol: float = 1e-10) -> int:
    """Count singular values above ``tol`` times the largest one."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))
