"""Kalman-type observer for the extended state-affine system.

The estimate and the Riccati matrix evolve as

    zhat' = A(u) zhat + B u + K (y - C zhat),      K = M C^T / W
    M'    = A(u) M + M A(u)^T - M C^T C M / W + V + theta M

with the extended matrices of :mod:`quadobs.augmentation`. The output is a
scalar, so ``W`` is a positive number.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .augmentation import AugmentedSystem, eval_A_ext
from .errors import ConfigurationError, DimensionError, NumericalBlowup, RiccatiDegenerate
from .numerics import as_matrix, as_vector, min_eig_sym, rk4_step
from .signals import SmoothSignal

DEFAULT_V_SCALE = 1e-4


@dataclass(frozen=True, eq=False)
class ObserverConfig:
    M0: np.ndarray
    V: np.ndarray
    W: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        M0 = as_matrix(self.M0, "M0")
        V = as_matrix(self.V, "V")
        W = np.asarray(self.W, dtype=float)
        if W.size != 1:
            raise ConfigurationError("W must be a scalar (the output is one-dimensional)")
        object.__setattr__(self, "M0", M0)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "W", float(W.reshape(())))
        object.__setattr__(self, "theta", float(self.theta))

    @classmethod
    def default(cls, dim: int, m0_scale: float = 100.0, v_scale: float = DEFAULT_V_SCALE,
                W: float = 1.0, theta: float = 0.0) -> "ObserverConfig":
        return cls(m0_scale * np.eye(dim), v_scale * np.eye(dim), W, theta)

    def validate(self, dim: int) -> None:
        """Raise :class:`ConfigurationError` naming the first failed check."""
        if self.M0.shape != (dim, dim):
            raise ConfigurationError(f"M0 must be {dim}x{dim}, got {self.M0.shape}")
        if self.V.shape != (dim, dim):
            raise ConfigurationError(f"V must be {dim}x{dim}, got {self.V.shape}")
        for name, mat in (("M0", self.M0), ("V", self.V)):
            if np.linalg.norm(mat - mat.T) > 1e-9 * max(1.0, np.linalg.norm(mat)):
                raise ConfigurationError(f"{name} is not symmetric")
        if not min_eig_sym(self.M0) > 0:
            raise ConfigurationError("M0 is not positive definite")
        v_min = min_eig_sym(self.V)
        if v_min < -1e-12 * max(1.0, np.linalg.norm(self.V)):
            raise ConfigurationError("V is not positive semidefinite")
        if not self.W > 0:
            raise ConfigurationError("W must be positive")
        if self.theta < 0:
            raise ConfigurationError("theta must be non-negative")
        if not (self.theta > 0 or v_min > 0):
            raise ConfigurationError("need theta > 0 or a positive definite V")

    @property
    def W_inv(self) -> float:
        return 1.0 / self.W


@dataclass(frozen=True, eq=False)
class ObserverState:
    t: float
    zhat: np.ndarray
    M: np.ndarray


def observer_init(aug: AugmentedSystem, cfg: ObserverConfig, zhat0, t0: float = 0.0) -> ObserverState:
    cfg.validate(aug.extended_dim)
    try:
        zhat0 = as_vector(zhat0, aug.extended_dim, "zhat0")
    except (DimensionError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from None
    return ObserverState(float(t0), zhat0, cfg.M0.copy())


def gain(cfg: ObserverConfig, M: np.ndarray) -> np.ndarray:
    """``K = M C^T / W``; with C selecting the first coordinate this is a column of M."""
    return M[:, 0] * cfg.W_inv


def observer_rhs(aug: AugmentedSystem, cfg: ObserverConfig, u: np.ndarray, y: float,
                 zhat: np.ndarray, M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    Au = eval_A_ext(aug, u)
    K = gain(cfg, M)
    dz = Au @ zhat + aug.B_ext @ u + K * (y - zhat[0])
    dM = Au @ M + M @ Au.T - np.outer(M[:, 0], M[0, :]) * cfg.W_inv + cfg.V + cfg.theta * M
    return dz, dM


def observer_step(aug: AugmentedSystem, cfg: ObserverConfig, st: ObserverState, sig: SmoothSignal,
                  y: float | Callable[[float], float], h: float) -> ObserverState:
    """Advance the observer by one RK4 step of length ``h``.

    ``y`` is either the measurement held over the step or a function of time
    sampled at the RK4 stages.
    """
    d = aug.extended_dim
    y_of = y if callable(y) else (lambda _t, _y=float(y): _y)

    def f(t, s):
        dz, dM = observer_rhs(aug, cfg, sig(t), y_of(t), s[:d], s[d:].reshape(d, d))
        return np.concatenate([dz, dM.ravel()])

    try:
        s = rk4_step(f, st.t, np.concatenate([st.zhat, st.M.ravel()]), h)
    except NumericalBlowup as exc:
        raise NumericalBlowup(exc.t, "observer state") from None
    t = st.t + h
    M = s[d:].reshape(d, d)
    M = 0.5 * (M + M.T)
    lam = float(np.linalg.eigvalsh(M)[0])
    if not lam > 0:
        raise RiccatiDegenerate(t, lam)
    return ObserverState(t, s[:d], M)


def extract_plant_estimate(aug: AugmentedSystem, st: ObserverState) -> np.ndarray:
    return st.zhat[aug.m:].copy()
