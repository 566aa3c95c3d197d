"""Smooth input signals with exact derivatives.

Inputs are vectors whose components are sums of primitives (sinusoids and
polynomials). Each primitive differentiates in closed form, so the
observability checks never fall back on finite differences of ``u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, SignalOrderError


@dataclass(frozen=True)
class Sinusoid:
    """``amplitude * sin(freq * t + phase)``."""

    amplitude: float
    freq: float
    phase: float = 0.0

    def derivative(self, t: np.ndarray, order: int) -> np.ndarray:
        return self.amplitude * self.freq**order * np.sin(self.freq * t + self.phase + order * math.pi / 2)

    def to_dict(self) -> dict:
        return {"kind": "sin", "amplitude": self.amplitude, "freq": self.freq, "phase": self.phase}


@dataclass(frozen=True)
class Polynomial:
    """``sum_k coeffs[k] * t**k``."""

    coeffs: tuple[float, ...]

    def derivative(self, t: np.ndarray, order: int) -> np.ndarray:
        c = np.polynomial.polynomial.polyder(np.asarray(self.coeffs, dtype=float), order) if order else self.coeffs
        return np.polynomial.polynomial.polyval(t, c) + 0.0 * t

    def to_dict(self) -> dict:
        return {"kind": "poly", "coeffs": list(self.coeffs)}


def constant(value: float) -> Polynomial:
    return Polynomial((float(value),))


def cosine(amplitude: float, freq: float, phase: float = 0.0) -> Sinusoid:
    return Sinusoid(amplitude, freq, phase + math.pi / 2)


Primitive = Sinusoid | Polynomial


class SmoothSignal:
    """Vector input ``u(t)`` with derivatives available up to ``max_order``.

    ``func(t, order)`` must accept a 1-D time array and return an array of
    shape ``(len(t), p)``.
    """

    def __init__(self, func: Callable[[np.ndarray, int], np.ndarray], p: int, max_order: int):
        if p < 1:
            raise ConfigurationError("signal dimension must be positive")
        if max_order < 0:
            raise ConfigurationError("max_order must be non-negative")
        self._func = func
        self.p = int(p)
        self.max_order = int(max_order)

    def __call__(self, t, order: int = 0) -> np.ndarray:
        """Value of the ``order``-th derivative; a (p,) vector for scalar ``t``."""
        if order < 0:
            raise ValueError("derivative order must be non-negative")
        if order > self.max_order:
            raise SignalOrderError(order, self.max_order)
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.asarray(self._func(ts, order), dtype=float).reshape(ts.shape[0], self.p)
        return out[0] if scalar else out

    def require(self, order: int) -> None:
        if order > self.max_order:
            raise SignalOrderError(order, self.max_order)


class PrimitiveSignal(SmoothSignal):
    """Signal whose components are sums of :class:`Sinusoid`/:class:`Polynomial` terms."""

    def __init__(self, components: Sequence[Sequence[Primitive]], max_order: int):
        self.components = tuple(tuple(c) for c in components)
        super().__init__(self._evaluate, len(self.components), max_order)

    def _evaluate(self, t: np.ndarray, order: int) -> np.ndarray:
        out = np.zeros((t.shape[0], self.p))
        for j, terms in enumerate(self.components):
            for term in terms:
                out[:, j] += term.derivative(t, order)
        return out

    def to_dict(self) -> dict:
        return {
            "max_order": self.max_order,
            "components": [[term.to_dict() for term in c] for c in self.components],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PrimitiveSignal":
        known = {"max_order", "components"}
        for key in doc:
            if key not in known:
                raise ConfigurationError(f"unknown signal key {key!r}")
        try:
            comps = [[primitive_from_dict(t) for t in c] for c in doc["components"]]
            return cls(comps, int(doc["max_order"]))
        except KeyError as exc:
            raise ConfigurationError(f"signal is missing key {exc.args[0]!r}") from None


def primitive_from_dict(doc: dict) -> Primitive:
    kind = doc.get("kind")
    fields = {
        "sin": {"kind", "amplitude", "freq", "phase"},
        "cos": {"kind", "amplitude", "freq", "phase"},
        "poly": {"kind", "coeffs"},
        "const": {"kind", "value"},
    }
    if kind not in fields:
        raise ConfigurationError(f"unknown signal primitive kind {kind!r}")
    for key in doc:
        if key not in fields[kind]:
            raise ConfigurationError(f"unknown key {key!r} in {kind!r} primitive")
    try:
        if kind == "sin":
            return Sinusoid(float(doc["amplitude"]), float(doc["freq"]), float(doc.get("phase", 0.0)))
        if kind == "cos":
            return cosine(float(doc["amplitude"]), float(doc["freq"]), float(doc.get("phase", 0.0)))
        if kind == "poly":
            return Polynomial(tuple(float(c) for c in doc["coeffs"]))
        return constant(float(doc["value"]))
    except KeyError as exc:
        raise ConfigurationError(f"{kind!r} primitive is missing key {exc.args[0]!r}") from None


def zero_signal(p: int, max_order: int = 10) -> PrimitiveSignal:
    return PrimitiveSignal([[constant(0.0)] for _ in range(p)], max_order)


def constant_signal(values: Sequence[float], max_order: int = 10) -> PrimitiveSignal:
    return PrimitiveSignal([[constant(v)] for v in values], max_order)
