"""Uniform-observability certificates for the extended system.

Everything here works on a fixed :class:`IntegrationGrid`: windows must start
and end on grid nodes and every integral is a composite Simpson sum with the
grid step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .augmentation import (
    AugmentedSystem,
    GammaTable,
    compute_gamma_table,
    eval_A_ext,
    eval_r,
)
from .errors import ComplexEigenvalues, GammaUnobservable
from .numerics import (
    IntegrationGrid,
    cumulative_simpson,
    exp_on_uniform_offsets,
    integrate_samples,
    mat_exp,
    min_eig_sym,
    numerical_rank,
)
from .signals import SmoothSignal

CONDITION_IDS = ("gramian-def3", "prop2", "prop3", "prop4", "prop5", "rank-thm2")
DEFAULT_DELTA = 2.0
DEFAULT_MU = 1e-6
RANK_TOL = 1e-10
REAL_EIG_TOL = 1e-9


@dataclass(frozen=True)
class PeReport:
    condition_id: str
    window_start: float
    delta: float
    margin: float
    threshold: float
    passed: bool
    skip_reason: str | None = None

    def __post_init__(self):
        if self.condition_id not in CONDITION_IDS:
            raise ValueError(f"unknown condition id {self.condition_id!r}")
        if not self.delta > 0:
            raise ValueError("window length must be positive")

    @classmethod
    def evaluate(cls, condition_id, window_start, delta, margin, threshold) -> "PeReport":
        return cls(condition_id, float(window_start), float(delta), float(margin),
                   float(threshold), bool(margin >= threshold))

    @classmethod
    def skipped(cls, condition_id, window_start, delta, threshold, reason: str) -> "PeReport":
        return cls(condition_id, float(window_start), float(delta), math.nan,
                   float(threshold), False, reason)

    @property
    def is_skipped(self) -> bool:
        return self.skip_reason is not None


class TransitionBlocks:
    """Blocks of the extended transition matrix along a given input.

    ``phi11`` and ``phi22`` are matrix exponentials of constant matrices.
    ``phi12(t, tau)`` is the integral of ``phi11(t, s) U(s) phi22(s, tau)``
    evaluated by per-interval Simpson sums with interval midpoints.
    """

    def __init__(self, aug: AugmentedSystem, sig: SmoothSignal, grid: IntegrationGrid):
        self.aug = aug
        self.sig = sig
        self.grid = grid
        fine = grid.t_start + 0.5 * grid.step * np.arange(2 * grid.intervals + 1)
        self._U_fine = aug.U(sig(fine, 0))

    def phi11(self, t: float, tau: float) -> np.ndarray:
        return mat_exp(self.aug.S, t - tau)

    def phi22(self, t: float, tau: float) -> np.ndarray:
        return mat_exp(self.aug.base.A, t - tau)

    def phi12(self, t: float, tau: float) -> np.ndarray:
        i_t = self.grid.index_of(t)
        i_tau = self.grid.index_of(tau)
        return self.phi12_profile(i_tau, i_t - i_tau)[-1]

    def phi12_profile(self, i_tau: int, steps: int) -> np.ndarray:
        """``phi12(s_k, s_{i_tau})`` for ``k = i_tau .. i_tau + steps``.

        ``steps`` may be negative to integrate backwards in time.
        """
        m, n = self.aug.m, self.aug.n
        if steps == 0:
            return np.zeros((1, m, n))
        sign = 1 if steps > 0 else -1
        count = abs(steps)
        h = self.grid.step
        # fine indices on the half-step grid, walking away from tau
        j0 = 2 * i_tau
        idx = j0 + sign * np.arange(2 * count + 1)
        U = self._U_fine[idx]
        back11 = exp_on_uniform_offsets(-self.aug.S, sign * h / 2, 2 * count + 1)
        fwd22 = exp_on_uniform_offsets(self.aug.base.A, sign * h / 2, 2 * count + 1)
        Q = back11 @ U @ fwd22
        G = sign * cumulative_simpson(Q[0::2], Q[1::2], h)
        fwd11 = exp_on_uniform_offsets(self.aug.S, sign * h, count + 1)
        return fwd11 @ G

    def full(self, t: float, tau: float) -> np.ndarray:
        """Assembled ``(m + n)`` square transition matrix."""
        m = self.aug.m
        out = np.zeros((self.aug.extended_dim,) * 2)
        out[:m, :m] = self.phi11(t, tau)
        out[:m, m:] = self.phi12(t, tau)
        out[m:, m:] = self.phi22(t, tau)
        return out


def gramian(aug: AugmentedSystem, blocks: TransitionBlocks, t: float, delta: float) -> np.ndarray:
    """Observability Gramian of the extended system over ``[t, t + delta]``."""
    grid = blocks.grid
    i0, i1 = grid.window(t, delta)
    count = i1 - i0
    taus = grid.step * np.arange(count + 1)
    # first row of exp(S tau) is (1, tau, tau^2/2, ...)
    row11 = np.stack([taus**j / math.factorial(j) for j in range(aug.m)], axis=1)
    row12 = blocks.phi12_profile(i0, count)[:, 0, :]
    v = np.concatenate([row11, row12], axis=1)
    W = integrate_samples(v[:, :, None] * v[:, None, :], grid.step)
    return 0.5 * (W + W.T)


def _starts(window_starts: Iterable[float]) -> list[float]:
    return sorted(float(s) for s in window_starts)


def check_uniform_observability(aug: AugmentedSystem, blocks: TransitionBlocks, delta: float = DEFAULT_DELTA,
                                mu: float = DEFAULT_MU, window_starts: Sequence[float] = (0.0,)) -> list[PeReport]:
    reports = []
    for t in _starts(window_starts):
        margin = min_eig_sym(gramian(aug, blocks, t, delta))
        reports.append(PeReport.evaluate("gramian-def3", t, delta, margin, mu))
    return reports


def kalman_observability_matrix(A: np.ndarray, C: np.ndarray, depth: int | None = None) -> np.ndarray:
    """Stack ``C, C A, ..., C A^(depth-1)`` (depth defaults to dim A)."""
    if depth is None:
        depth = A.shape[0]
    rows = [np.atleast_2d(C)]
    for _ in range(depth - 1):
        rows.append(rows[-1] @ A)
    return np.vstack(rows)


def zero_input_rank(aug: AugmentedSystem) -> int:
    """Kalman rank of the extended pair when the input vanishes."""
    A0 = eval_A_ext(aug, np.zeros(aug.p))
    return numerical_rank(kalman_observability_matrix(A0, aug.C_ext), RANK_TOL)


def _gamma_up_to(aug: AugmentedSystem, gam: GammaTable, k: int) -> GammaTable:
    return gam if gam.max_k >= k else compute_gamma_table(aug, k)


def _window_nodes(grid: IntegrationGrid, t: float, delta: float) -> np.ndarray:
    i0, i1 = grid.window(t, delta)
    return grid.nodes[i0:i1 + 1]


def check_prop2(aug: AugmentedSystem, gam: GammaTable, sig: SmoothSignal, kappa: int,
                grid: IntegrationGrid, delta: float = DEFAULT_DELTA, mu: float = DEFAULT_MU,
                window_starts: Sequence[float] = (0.0,)) -> list[PeReport]:
    """Windowed integral of ``det(sum_{i=m}^{kappa} r_i^T r_i)``.

    The sum has ``kappa - m + 1`` rank-one terms, so for ``n > 1`` the
    determinant vanishes identically unless ``kappa >= m + n - 1``.
    """
    if kappa < aug.m:
        raise ValueError(f"kappa must be at least m = {aug.m}")
    sig.require(kappa - 1)
    gam = _gamma_up_to(aug, gam, kappa)
    reports = []
    for t in _starts(window_starts):
        s = _window_nodes(grid, t, delta)
        acc = np.zeros((s.shape[0], aug.n, aug.n))
        for i in range(aug.m, kappa + 1):
            r = eval_r(aug, gam, sig, i, s)
            acc += r[:, :, None] * r[:, None, :]
        margin = float(integrate_samples(np.linalg.det(acc), grid.step))
        reports.append(PeReport.evaluate("prop2", t, delta, margin, mu))
    return reports


def check_prop3(aug: AugmentedSystem, gam: GammaTable, sig: SmoothSignal, grid: IntegrationGrid,
                delta: float = DEFAULT_DELTA, mu: float = DEFAULT_MU,
                window_starts: Sequence[float] = (0.0,)) -> list[PeReport]:
    """Observability Gramian of the pair ``(A, r_m(t))``."""
    gam = _gamma_up_to(aug, gam, aug.m)
    reports = []
    for t in _starts(window_starts):
        s = _window_nodes(grid, t, delta)
        r = eval_r(aug, gam, sig, aug.m, s)
        phi22 = exp_on_uniform_offsets(aug.base.A, grid.step, s.shape[0])
        rp = np.einsum("kj,kjl->kl", r, phi22)
        G = integrate_samples(rp[:, :, None] * rp[:, None, :], grid.step)
        reports.append(PeReport.evaluate("prop3", t, delta, min_eig_sym(G), mu))
    return reports


def require_real_eigenvalues(A: np.ndarray, tol: float = REAL_EIG_TOL) -> None:
    eig = np.linalg.eigvals(A)
    if eig.size and np.max(np.abs(eig.imag)) > tol:
        raise ComplexEigenvalues(f"A has complex eigenvalues (max |Im| = {np.max(np.abs(eig.imag)):.3e})")


def check_prop4(aug: AugmentedSystem, gam: GammaTable, sig: SmoothSignal, grid: IntegrationGrid,
                delta: float = DEFAULT_DELTA, mu: float = DEFAULT_MU,
                window_starts: Sequence[float] = (0.0,)) -> list[PeReport]:
    """Excitation of ``r_m`` alone; valid when ``A`` has real eigenvalues.

    Only the real-spectrum hypothesis is enforced; diagonalizability of ``A``
    is not required.
    """
    require_real_eigenvalues(aug.base.A)
    gam = _gamma_up_to(aug, gam, aug.m)
    reports = []
    for t in _starts(window_starts):
        s = _window_nodes(grid, t, delta)
        r = eval_r(aug, gam, sig, aug.m, s)
        G = integrate_samples(r[:, :, None] * r[:, None, :], grid.step)
        reports.append(PeReport.evaluate("prop4", t, delta, min_eig_sym(G), mu))
    return reports


def stacked_input_derivatives(sig: SmoothSignal, m: int, t) -> np.ndarray:
    """``(u, u', ..., u^(m-1))`` stacked per time; shape (N, p m)."""
    sig.require(m - 1)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    return np.concatenate([sig(ts, j) for j in range(m)], axis=1)


def check_prop5(aug: AugmentedSystem, gam: GammaTable, sig: SmoothSignal, grid: IntegrationGrid,
                delta: float = DEFAULT_DELTA, mu: float = DEFAULT_MU,
                window_starts: Sequence[float] = (0.0,)) -> list[PeReport]:
    """Excitation of the stacked input derivatives, given an observable ``(A, Gamma)``."""
    A = aug.base.A
    require_real_eigenvalues(A)
    gam = _gamma_up_to(aug, gam, aug.m)
    Gamma = gam.stacked(aug.m)
    if numerical_rank(kalman_observability_matrix(A, Gamma), RANK_TOL) < aug.n:
        raise GammaUnobservable("the pair (A, Gamma) is not Kalman observable")
    reports = []
    for t in _starts(window_starts):
        s = _window_nodes(grid, t, delta)
        Ub = stacked_input_derivatives(sig, aug.m, s)
        G = integrate_samples(Ub[:, :, None] * Ub[:, None, :], grid.step)
        reports.append(PeReport.evaluate("prop5", t, delta, min_eig_sym(G), mu))
    return reports


def observability_rows(aug: AugmentedSystem, gam: GammaTable, sig: SmoothSignal, t: float,
                       depth: int) -> np.ndarray:
    """Rows ``N_0 .. N_depth`` of the time-varying observability matrix at ``t``."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    gam = _gamma_up_to(aug, gam, max(depth, 1))
    rows = np.zeros((depth + 1, aug.extended_dim))
    for i in range(depth + 1):
        if i < aug.m:
            rows[i, i] = 1.0
        if i >= 1:
            rows[i, aug.m:] = eval_r(aug, gam, sig, i, t)
    return rows


def observability_matrix_rank(aug: AugmentedSystem, gam: GammaTable, sig: SmoothSignal, t: float,
                              depth: int) -> int:
    return numerical_rank(observability_rows(aug, gam, sig, t, depth), RANK_TOL)


def check_rank(aug: AugmentedSystem, gam: GammaTable, sig: SmoothSignal, depth: int,
               delta: float, window_starts: Sequence[float]) -> list[PeReport]:
    """Pointwise rank of the observability matrix at each window start."""
    full = aug.extended_dim
    return [PeReport.evaluate("rank-thm2", t, delta,
                              observability_matrix_rank(aug, gam, sig, t, depth), full)
            for t in _starts(window_starts)]
