"""Truncated Fourier series in a base frequency, the common output format of
the perturbative solver and of the harmonic projection of sampled orbits."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class HarmonicSeries:
    """``a0 + sum_k cos[k-1] cos(k omega t) + sin[k-1] sin(k omega t)``."""

    omega: float
    a0: float
    cos: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sin: np.ndarray = field(default_factory=lambda: np.zeros(0))
    order: int = 0

    def __post_init__(self):
        c = np.asarray(self.cos, dtype=float).copy()
        s = np.asarray(self.sin, dtype=float).copy()
        n = max(c.size, s.size)
        c = np.pad(c, (0, n - c.size))
        s = np.pad(s, (0, n - s.size))
        c.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)
        object.__setattr__(self, "a0", float(self.a0))

    @property
    def max_harmonic(self) -> int:
        return self.cos.size

    @property
    def harmonics(self) -> list[tuple[int, float, float]]:
        return [(k + 1, float(a), float(b)) for k, (a, b) in enumerate(zip(self.cos, self.sin))]

    def coefficient(self, k: int) -> tuple[float, float]:
        if k == 0:
            return self.a0, 0.0
        if 1 <= k <= self.max_harmonic:
            return float(self.cos[k - 1]), float(self.sin[k - 1])
        return 0.0, 0.0

    def amplitude(self, k: int) -> float:
        return math.hypot(*self.coefficient(k))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.a0)
        for k in range(1, self.max_harmonic + 1):
            arg = k * self.omega * t
            out = out + self.cos[k - 1] * np.cos(arg) + self.sin[k - 1] * np.sin(arg)
        return out

    def __add__(self, other: "HarmonicSeries") -> "HarmonicSeries":
        if not math.isclose(self.omega, other.omega, rel_tol=1e-12):
            raise InvalidParameterError("cannot add series with different base frequencies")
        n = max(self.max_harmonic, other.max_harmonic)
        c = np.pad(self.cos, (0, n - self.max_harmonic)) + np.pad(other.cos, (0, n - other.max_harmonic))
        s = np.pad(self.sin, (0, n - self.max_harmonic)) + np.pad(other.sin, (0, n - other.max_harmonic))
        return HarmonicSeries(self.omega, self.a0 + other.a0, c, s, max(self.order, other.order))

    def scaled(self, factor: float) -> "HarmonicSeries":
        return HarmonicSeries(self.omega, factor * self.a0, factor * self.cos, factor * self.sin,
                              self.order)

    def to_dict(self) -> dict:
        return {"order": self.order, "omega": self.omega, "a0": self.a0,
                "harmonics": [list(h) for h in self.harmonics]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "HarmonicSeries":
        harm = sorted(data.get("harmonics", []))
        ks = [int(h[0]) for h in harm]
        if len(set(ks)) != len(ks) or any(k < 1 for k in ks):
            raise InvalidParameterError("harmonic indices must be unique and positive")
        n = max(ks, default=0)
        c = np.zeros(n)
        s = np.zeros(n)
        for k, a, b in harm:
            c[int(k) - 1] = a
            s[int(k) - 1] = b
        return cls(float(data["omega"]), float(data["a0"]), c, s, int(data.get("order", 0)))


def project(values, max_harmonic: int, omega: float) -> HarmonicSeries:
    """Exact discrete Fourier projection of samples on a uniform grid over one period.

    ``values[j]`` is the value at ``t = j * tau / N``.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    if max_harmonic < 0 or n < 2 * max_harmonic + 2:
        raise InvalidParameterError(
            f"{n} samples cannot resolve {max_harmonic} harmonics (need >= {2 * max_harmonic + 2})")
    c = np.fft.rfft(v) / n
    return HarmonicSeries(omega, c[0].real, 2.0 * c[1:max_harmonic + 1].real,
                          -2.0 * c[1:max_harmonic + 1].imag)
