"""Scenarios, plant/observer co-simulation and CSV/JSON I/O."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .augmentation import (
    AugmentedSystem,
    QuadraticOutputSystem,
    build_augmented,
    compute_c_sequence,
    compute_gamma_table,
    eval_A_ext,
)
from .errors import (
    ComplexEigenvalues,
    ConfigurationError,
    GammaUnobservable,
    NumericalBlowup,
    RiccatiDegenerate,
    ScenarioFormatError,
    SignalOrderError,
)
from .numerics import IntegrationGrid, as_vector, rk4_step
from .observability import (
    DEFAULT_DELTA,
    DEFAULT_MU,
    PeReport,
    TransitionBlocks,
    check_prop2,
    check_prop3,
    check_prop4,
    check_prop5,
    check_rank,
    check_uniform_observability,
)
from .observer import ObserverConfig
from .signals import PrimitiveSignal, Sinusoid, SmoothSignal, cosine

PE_HEADER = ["condition_id", "window_start", "delta", "margin", "threshold", "pass", "skip_reason"]


@dataclass
class PeWindows:
    delta: float = DEFAULT_DELTA
    mu: float = DEFAULT_MU
    starts: tuple[float, ...] = (0.0,)
    kappa: int | None = None


@dataclass(eq=False)
class Scenario:
    system: QuadraticOutputSystem
    signal: SmoothSignal
    x0: np.ndarray
    zhat0: np.ndarray
    observer_cfg: ObserverConfig
    grid: IntegrationGrid
    pe: PeWindows = field(default_factory=PeWindows)
    name: str = "scenario"
    notes: str = ""
    max_m: int | None = None
    aug: AugmentedSystem = field(init=False, repr=False)

    def __post_init__(self):
        self.aug = build_augmented(self.system, compute_c_sequence(self.system, self.max_m))
        d = self.aug.extended_dim
        try:
            self.x0 = as_vector(self.x0, self.system.n, "x0")
            self.zhat0 = as_vector(self.zhat0, d, "zhat0")
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        if self.signal.p != self.system.p:
            raise ConfigurationError(f"signal has {self.signal.p} components, B has {self.system.p} columns")
        if self.signal.max_order < self.aug.m:
            raise ConfigurationError(
                f"signal supplies derivatives up to {self.signal.max_order}; at least m = {self.aug.m} needed"
            )
        self.observer_cfg.validate(d)


@dataclass(eq=False)
class SimulationTrace:
    """Per-node histories; rows align with ``t``."""

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray  # true extra coordinates z_0..z_{m-1}
    zhat: np.ndarray
    y: np.ndarray
    M_min_eig: np.ndarray
    m: int

    @property
    def xhat(self) -> np.ndarray:
        return self.zhat[:, self.m:]

    @property
    def yhat(self) -> np.ndarray:
        return self.zhat[:, 0]

    @property
    def z_full(self) -> np.ndarray:
        return np.hstack([self.z, self.x])

    @property
    def err_x(self) -> np.ndarray:
        return np.linalg.norm(self.xhat - self.x, axis=1)

    @property
    def err_z(self) -> np.ndarray:
        return np.linalg.norm(self.zhat - self.z_full, axis=1)

    def __len__(self) -> int:
        return self.t.shape[0]


def _quadratic_forms(x: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    return np.stack([0.5 * np.einsum("ki,ij,kj->k", x, Ci, x) for Ci in mats], axis=1)


def fine_times(grid: IntegrationGrid) -> np.ndarray:
    """Grid nodes interleaved with interval midpoints."""
    return grid.t_start + 0.5 * grid.step * np.arange(2 * grid.intervals + 1)


def simulate(sc: Scenario, backend: str | None = None) -> SimulationTrace:
    """Co-integrate plant and observer with RK4 on the scenario grid."""
    aug, cfg, grid = sc.aug, sc.observer_cfg, sc.grid
    loop = kernels.get_loop(backend)
    u_fine = sc.signal(fine_times(grid), 0)
    x, zhat, M, status, bad = loop(aug.base.A, aug.base.B, aug.base.C, aug.BtC, u_fine, grid.step,
                                   sc.x0, sc.zhat0, cfg.M0, cfg.V, cfg.W_inv, cfg.theta)
    if status == 1:
        raise NumericalBlowup(grid.t_start + bad * grid.step)
    if status == 2:
        raise RiccatiDegenerate(grid.t_start + bad * grid.step)
    z = _quadratic_forms(x, aug.cseq.matrices)
    y = _quadratic_forms(x, [aug.base.C])[:, 0]
    min_eig = np.linalg.eigvalsh(M)[:, 0]
    return SimulationTrace(grid.nodes, x, z, zhat, y, min_eig, aug.m)


def simulate_augmented(aug: AugmentedSystem, sig: SmoothSignal, z0, grid: IntegrationGrid) -> np.ndarray:
    """Integrate ``z' = A(u) z + B_ext u`` directly; rows are grid nodes."""
    B_ext = aug.B_ext

    def f(t, z):
        u = sig(t)
        return eval_A_ext(aug, u) @ z + B_ext @ u

    out = np.empty((len(grid), aug.extended_dim))
    out[0] = z0
    for k, t in enumerate(grid.nodes[:-1]):
        out[k + 1] = rk4_step(f, t, out[k], grid.step)
    return out


# --- bundled vehicle scenario ------------------------------------------------

def _vehicle_components(n: int) -> list[tuple[list, float, list]]:
    """(position terms, position offset, acceleration terms) per axis.

    For n = 3 this is the reference path (20 cos t - 20, 10 sin 2t + 20,
    -4 cos 4t); other dimensions reuse the three patterns with a frequency
    offset so the axes stay distinct.
    """
    base = [
        ([cosine(20.0, 1.0)], -20.0),
        ([Sinusoid(10.0, 2.0)], 20.0),
        ([cosine(-4.0, 4.0)], 0.0),
    ]
    out = []
    for k in range(n):
        terms, offset = base[k % 3]
        scale = 1.0 + 0.5 * (k // 3)
        pos = [Sinusoid(s.amplitude, s.freq * scale, s.phase) for s in terms]
        acc = [Sinusoid(-s.amplitude * (s.freq * scale) ** 2, s.freq * scale, s.phase) for s in terms]
        out.append((pos, offset, acc))
    return out


def vehicle_system(n: int = 3) -> QuadraticOutputSystem:
    """Double integrator in R^n measured through half its squared range."""
    if n < 1:
        raise ValueError("n must be at least 1")
    I, Z = np.eye(n), np.zeros((n, n))
    A = np.block([[Z, I], [Z, Z]])
    B = np.vstack([Z, I])
    C = np.block([[I, Z], [Z, Z]])
    return QuadraticOutputSystem(A, B, C)


def vehicle_scenario(n: int = 3, step: float = 1e-3, horizon: float = 20.0, theta: float = 0.0,
                     max_order: int = 10) -> Scenario:
    comps = _vehicle_components(n)
    signal = PrimitiveSignal([acc for _, _, acc in comps], max_order)
    pos0 = np.array([sum(s.derivative(np.array([0.0]), 0)[0] for s in pos) + off for pos, off, _ in comps])
    vel0 = np.array([sum(s.derivative(np.array([0.0]), 1)[0] for s in pos) for pos, _, _ in comps])
    system = vehicle_system(n)
    m = 3
    d = m + 2 * n
    cfg = ObserverConfig.default(d, m0_scale=100.0, v_scale=1e-4, W=1.0, theta=theta)
    grid = IntegrationGrid(0.0, horizon, step)
    # 4 s windows: at 2 s the extended Gramian's smallest eigenvalue is ~1e-9
    delta = 4.0
    starts = tuple(float(s) for s in np.arange(0.0, horizon - delta + 1e-9, 2.0))
    return Scenario(
        system=system,
        signal=signal,
        x0=np.concatenate([pos0, vel0]),
        zhat0=np.zeros(d),
        observer_cfg=cfg,
        grid=grid,
        pe=PeWindows(delta=delta, mu=DEFAULT_MU, starts=starts, kappa=m + 2 * n - 1),
        name=f"vehicle-{n}d",
        notes="Observer tuning M0 = 100 I, V = 1e-4 I on the extended state; W = 1 for the scalar output.",
    )


# --- PE suite ----------------------------------------------------------------

def run_pe_suite(sc: Scenario) -> list[PeReport]:
    """Evaluate every applicable certificate on the scenario windows.

    Conditions whose hypotheses fail are reported as skipped with a reason.
    """
    aug, sig, grid, pe = sc.aug, sc.signal, sc.grid, sc.pe
    starts, delta, mu = list(pe.starts), pe.delta, pe.mu
    kappa = pe.kappa if pe.kappa is not None else aug.m + aug.n - 1
    gam = compute_gamma_table(aug, max(kappa, aug.m + aug.n - 1))
    reports = []
    blocks = TransitionBlocks(aug, sig, grid)
    reports += check_uniform_observability(aug, blocks, delta, mu, starts)

    def gated(cid, fn):
        try:
            return fn()
        except (ComplexEigenvalues, GammaUnobservable, SignalOrderError) as exc:
            reason = f"{type(exc).__name__}: {exc}"
            return [PeReport.skipped(cid, t, delta, mu, reason) for t in sorted(starts)]

    reports += gated("prop2", lambda: check_prop2(aug, gam, sig, kappa, grid, delta, mu, starts))
    reports += gated("prop3", lambda: check_prop3(aug, gam, sig, grid, delta, mu, starts))
    reports += gated("prop4", lambda: check_prop4(aug, gam, sig, grid, delta, mu, starts))
    reports += gated("prop5", lambda: check_prop5(aug, gam, sig, grid, delta, mu, starts))
    reports += gated("rank-thm2", lambda: check_rank(aug, gam, sig, aug.m + aug.n - 1, delta, starts))
    return reports


# --- CSV ---------------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_header(n: int, m: int) -> list[str]:
    d = m + n
    return (["t"] + [f"x{i + 1}" for i in range(n)] + [f"xhat{i + 1}" for i in range(n)]
            + [f"z{i}" for i in range(m)] + [f"zhat{i}" for i in range(d)]
            + ["y", "yhat", "err_x", "err_z"])


def trace_to_csv(trace: SimulationTrace) -> str:
    n = trace.x.shape[1]
    cols = np.column_stack([trace.t, trace.x, trace.xhat, trace.z, trace.zhat, trace.y,
                            trace.yhat, trace.err_x, trace.err_z])
    buf = io.StringIO()
    buf.write(",".join(trace_header(n, trace.m)) + "\n")
    for row in cols:
        buf.write(",".join(map(_fmt, row)) + "\n")
    return buf.getvalue()


def emit_trace_csv(trace: SimulationTrace, path) -> None:
    _atomic_write(path, trace_to_csv(trace))


def pe_to_csv(reports: Sequence[PeReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PE_HEADER)
    for r in reports:
        w.writerow([r.condition_id, _fmt(r.window_start), _fmt(r.delta),
                    "" if math.isnan(r.margin) else _fmt(r.margin), _fmt(r.threshold),
                    "true" if r.passed else "false", r.skip_reason or ""])
    return buf.getvalue()


def emit_pe_csv(reports: Sequence[PeReport], path) -> None:
    _atomic_write(path, pe_to_csv(reports))


def read_trace_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n").split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def read_pe_csv(path) -> list[PeReport]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [PeReport(r["condition_id"], float(r["window_start"]), float(r["delta"]),
                     float(r["margin"]) if r["margin"] else math.nan, float(r["threshold"]),
                     r["pass"] == "true", r["skip_reason"] or None) for r in rows]


# --- scenario documents --------------------------------------------------------

_TOP_KEYS = {"name", "notes", "system", "signal", "x0", "zhat0", "observer", "grid", "pe", "max_m"}
_SECTION_KEYS = {
    "system": {"A", "B", "C"},
    "observer": {"M0", "V", "W", "theta"},
    "grid": {"t_start", "t_end", "step"},
    "pe": {"delta", "mu", "starts", "kappa"},
}


def _check_keys(doc: dict, allowed: set, where: str) -> None:
    if not isinstance(doc, dict):
        raise ScenarioFormatError(f"{where} must be a mapping")
    for key in doc:
        if key not in allowed:
            raise ScenarioFormatError(f"unknown key {key!r} in {where}")


def _square_or_scaled(value, dim: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(dim)
    if arr.shape != (dim, dim):
        raise ScenarioFormatError(f"{name} must be a scalar or a {dim}x{dim} matrix")
    return arr


def scenario_from_dict(doc: dict) -> Scenario:
    _check_keys(doc, _TOP_KEYS, "scenario")
    for section, keys in _SECTION_KEYS.items():
        if section in doc:
            _check_keys(doc[section], keys, section)
    try:
        sysd = doc["system"]
        system = QuadraticOutputSystem(sysd["A"], sysd["B"], sysd["C"])
        signal = PrimitiveSignal.from_dict(doc["signal"])
        g = doc["grid"]
        grid = IntegrationGrid(float(g.get("t_start", 0.0)), float(g["t_end"]), float(g["step"]))
    except KeyError as exc:
        raise ScenarioFormatError(f"missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ScenarioFormatError(str(exc)) from None
    max_m = doc.get("max_m")
    aug = build_augmented(system, compute_c_sequence(system, max_m))
    d = aug.extended_dim
    obs = doc.get("observer", {})
    cfg = ObserverConfig(
        _square_or_scaled(obs.get("M0", 100.0), d, "M0"),
        _square_or_scaled(obs.get("V", 1e-4), d, "V"),
        float(obs.get("W", 1.0)),
        float(obs.get("theta", 0.0)),
    )
    pe = doc.get("pe", {})
    windows = PeWindows(
        delta=float(pe.get("delta", DEFAULT_DELTA)),
        mu=float(pe.get("mu", DEFAULT_MU)),
        starts=tuple(float(s) for s in pe.get("starts", [grid.t_start])),
        kappa=None if pe.get("kappa") is None else int(pe["kappa"]),
    )
    if "x0" not in doc:
        raise ScenarioFormatError("missing key 'x0'")
    return Scenario(system, signal, doc["x0"], doc.get("zhat0", np.zeros(d)), cfg, grid, windows,
                    name=str(doc.get("name", "scenario")), notes=str(doc.get("notes", "")), max_m=max_m)


def scenario_to_dict(sc: Scenario) -> dict:
    if not isinstance(sc.signal, PrimitiveSignal):
        raise ConfigurationError("only primitive-composed signals can be serialized")
    doc = {
        "name": sc.name,
        "notes": sc.notes,
        "system": {k: getattr(sc.system, k).tolist() for k in ("A", "B", "C")},
        "signal": sc.signal.to_dict(),
        "x0": sc.x0.tolist(),
        "zhat0": sc.zhat0.tolist(),
        "observer": {"M0": sc.observer_cfg.M0.tolist(), "V": sc.observer_cfg.V.tolist(),
                     "W": sc.observer_cfg.W, "theta": sc.observer_cfg.theta},
        "grid": {"t_start": sc.grid.t_start, "t_end": sc.grid.t_end, "step": sc.grid.step},
        "pe": {"delta": sc.pe.delta, "mu": sc.pe.mu, "starts": list(sc.pe.starts), "kappa": sc.pe.kappa},
    }
    if sc.max_m is not None:
        doc["max_m"] = sc.max_m
    return doc


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path}: {exc}") from None
    return scenario_from_dict(doc)


def save_scenario(sc: Scenario, path) -> None:
    _atomic_write(path, json.dumps(scenario_to_dict(sc), indent=2) + "\n")


BUNDLED = {"vehicle": "vehicle3d.json", "vehicle3d": "vehicle3d.json"}


def resolve_scenario(ref: str) -> Scenario:
    """Load a scenario from a path or a bundled name such as ``vehicle``."""
    if ref in BUNDLED and not os.path.exists(ref):
        return load_scenario(Path(__file__).with_name("scenarios") / BUNDLED[ref])
    return load_scenario(ref)
