"""Immersion of a quadratic-output LTI system into a state-affine system.

The plant ``x' = A x + B u``, ``y = x^T C x / 2`` is extended with the
coordinates ``z_i = x^T C_i x / 2`` where ``C_{i+1} = C_i A + A^T C_i``.
When some ``C_m`` vanishes the extended state ``(z_0, ..., z_{m-1}, x)``
obeys linear dynamics whose matrix depends affinely on ``u``, and the
output becomes the first coordinate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import AssumptionViolated, ConfigurationError, DimensionError
from .numerics import as_matrix, as_vector
from .signals import SmoothSignal

SYMMETRY_SILENT_RTOL = 1e-12
SYMMETRY_WARN_RTOL = 1e-9
NILPOTENCY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class QuadraticOutputSystem:
    """Plant matrices ``A`` (n x n), ``B`` (n x p) and symmetric ``C`` (n x n)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {B.shape}")
        if C.shape != (n, n):
            raise DimensionError(f"C must be {n}x{n}, got {C.shape}")
        asym = np.linalg.norm(C - C.T) / max(1.0, np.linalg.norm(C))
        if asym > SYMMETRY_WARN_RTOL:
            raise ConfigurationError(f"C is not symmetric (relative asymmetry {asym:.3e})")
        if asym > SYMMETRY_SILENT_RTOL:
            warnings.warn(f"C symmetrized (relative asymmetry {asym:.3e})", stacklevel=3)
        C = 0.5 * (C + C.T)
        for name, val in (("A", A), ("B", B), ("C", C)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    def output(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ self.C @ x)


@dataclass(frozen=True, eq=False)
class CMatrixSequence:
    """``C_0 .. C_{m-1}``; the next iterate ``C_m`` vanished."""

    matrices: tuple[np.ndarray, ...]

    @property
    def m(self) -> int:
        return len(self.matrices)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.matrices[i]


def compute_c_sequence(sys: QuadraticOutputSystem, max_m: int | None = None,
                       tol: float = NILPOTENCY_RTOL) -> CMatrixSequence:
    """Iterate ``C_{i+1} = C_i A + A^T C_i`` until the iterate vanishes.

    ``m`` is the first index with ``||C_m||_F <= tol * ||C||_F``. The search
    stops at ``max_m`` (default ``2 n``, enough for any nilpotent ``A``).
    """
    if max_m is None:
        max_m = 2 * sys.n
    if max_m < 1:
        raise ValueError("max_m must be at least 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    ref = np.linalg.norm(sys.C)
    if ref == 0.0:
        raise ConfigurationError("C is identically zero; the output carries no information")
    seq = [sys.C]
    Ci = sys.C
    for _ in range(max_m):
        Ci = Ci @ sys.A + sys.A.T @ Ci
        if np.linalg.norm(Ci) <= tol * ref:
            return CMatrixSequence(tuple(seq))
        seq.append(Ci)
    raise AssumptionViolated(max_m, float(np.linalg.norm(Ci)))


def c_closed_form(sys: QuadraticOutputSystem, i: int) -> np.ndarray:
    """Binomial expansion ``sum_r binom(i, r) (A^T)^r C A^(i-r)``."""
    if i < 0:
        raise ValueError("index must be non-negative")
    A, C = sys.A, sys.C
    powers = [np.eye(sys.n)]
    for _ in range(i):
        powers.append(powers[-1] @ A)
    return sum(comb(i, r) * powers[r].T @ C @ powers[i - r] for r in range(i + 1))


def shift_matrix(m: int) -> np.ndarray:
    return np.eye(m, k=1)


@dataclass(frozen=True, eq=False)
class AugmentedSystem:
    """Extended state-affine system of dimension ``m + n``."""

    base: QuadraticOutputSystem
    cseq: CMatrixSequence
    # B^T C_i stacked: shape (m, p, n)
    BtC: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        BtC = np.stack([self.base.B.T @ Ci for Ci in self.cseq.matrices])
        BtC.setflags(write=False)
        object.__setattr__(self, "BtC", BtC)

    @property
    def m(self) -> int:
        return self.cseq.m

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def p(self) -> int:
        return self.base.p

    @property
    def extended_dim(self) -> int:
        return self.m + self.n

    @property
    def S(self) -> np.ndarray:
        return shift_matrix(self.m)

    @property
    def B_ext(self) -> np.ndarray:
        return np.vstack([np.zeros((self.m, self.p)), self.base.B])

    @property
    def C_ext(self) -> np.ndarray:
        c = np.zeros((1, self.extended_dim))
        c[0, 0] = 1.0
        return c

    def U(self, u) -> np.ndarray:
        """Coupling block with rows ``u^T B^T C_i``; batched when ``u`` is (N, p)."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.p:
            raise DimensionError(f"input must have {self.p} entries, got {u.shape[-1]}")
        return np.einsum("...j,ijk->...ik", u, self.BtC)


def build_augmented(sys: QuadraticOutputSystem, cseq: CMatrixSequence | None = None) -> AugmentedSystem:
    if cseq is None:
        cseq = compute_c_sequence(sys)
    if cseq.m < 1 or cseq[0].shape != sys.C.shape or not np.array_equal(cseq[0], sys.C):
        raise DimensionError("C-sequence was not derived from this system (C_0 != C)")
    return AugmentedSystem(sys, cseq)


def eval_A_ext(aug: AugmentedSystem, u) -> np.ndarray:
    """Extended state matrix for input value ``u``."""
    u = as_vector(u, aug.p, "u")
    m = aug.m
    out = np.zeros((aug.extended_dim, aug.extended_dim))
    out[:m, :m] = aug.S
    out[:m, m:] = aug.U(u)
    out[m:, m:] = aug.base.A
    return out


def extend_initial_state(aug: AugmentedSystem, x0) -> np.ndarray:
    x0 = as_vector(x0, aug.n, "x0")
    z = [0.5 * x0 @ Ci @ x0 for Ci in aug.cseq.matrices]
    return np.concatenate([z, x0])


@dataclass(frozen=True, eq=False)
class GammaTable:
    """Coefficient matrices with ``r_k = sum_j (d^j u / dt^j)^T Gamma[j+1, k]``.

    Entries are stored for ``0 <= i <= k + 1`` and ``0 <= k <= max_k``.
    """

    entries: dict
    max_k: int

    def __getitem__(self, key: tuple[int, int]) -> np.ndarray:
        i, k = key
        if not (0 <= k <= self.max_k and 0 <= i <= k + 1):
            raise KeyError(f"Gamma[{i},{k}] outside stored range (max_k = {self.max_k})")
        return self.entries[(i, k)]

    def stacked(self, k: int) -> np.ndarray:
        """Rows ``Gamma[1,k]; ...; Gamma[k,k]``, shape (k p, n)."""
        return np.vstack([self[i, k] for i in range(1, k + 1)])


def compute_gamma_table(aug: AugmentedSystem, max_k: int | None = None) -> GammaTable:
    if max_k is None:
        max_k = aug.m
    A = aug.base.A
    zero = np.zeros((aug.p, aug.n))

    def base(k):
        return aug.BtC[k] if k < aug.m else zero

    entries = {(0, 0): base(0), (1, 0): zero}
    for k in range(max_k):
        entries[(0, k + 1)] = base(k + 1)
        for i in range(k + 1):
            entries[(i + 1, k + 1)] = entries[(i + 1, k)] @ A + entries[(i, k)]
        entries[(k + 2, k + 1)] = zero
    for v in entries.values():
        v.setflags(write=False)
    return GammaTable(entries, max_k)


def eval_r(aug: AugmentedSystem, gam: GammaTable, sig: SmoothSignal, i: int, t) -> np.ndarray:
    """Row vector ``r_i(t)`` built from exact input derivatives.

    Returns shape (n,) for scalar ``t`` and (N, n) for a time array.
    """
    if i < 0:
        raise ValueError("index must be non-negative")
    if i > gam.max_k:
        raise ValueError(f"Gamma table holds k <= {gam.max_k}; r_{i} needs a larger table")
    if i >= 1:
        sig.require(i - 1)
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    r = np.zeros((ts.shape[0], aug.n))
    for j in range(i):
        G = gam[j + 1, i]
        if G.any():
            r += sig(ts, j) @ G
    return r[0] if scalar else r
