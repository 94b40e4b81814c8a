"""Gaussian figures of merit and their extrema over one modulation period.

Inputs use the vacuum = 1/2 convention; only ``gaussian_discord`` rescales to
vacuum = 1 internally. Log-negativity uses natural logs, discord uses log2.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .covariance import CovOrbit, symplectic_eigenvalues
from .errors import InvalidParameterError, NumericalFailureError

CONVENTIONS = {
    "vacuum_variance": 0.5,
    "log_negativity_log": "natural",
    "discord_log": "log2",
}

_BLOCKS = {"mirror": slice(0, 2), "cavity": slice(2, 4)}


def phonon_number(c):
    c = np.asarray(c, dtype=float)
    return 0.5 * (c[..., 0, 0] + c[..., 1, 1] - 1.0)


def min_quadrature_variance(c, block: str = "mirror"):
    """Smaller eigenvalue of the mirror or cavity 2x2 block."""
    try:
        sl = _BLOCKS[block]
    except KeyError:
        raise InvalidParameterError(f"block must be 'mirror' or 'cavity', got {block!r}") from None
    b = np.asarray(c, dtype=float)[..., sl, sl]
    a, d, k = b[..., 0, 0], b[..., 1, 1], 0.5 * (b[..., 0, 1] + b[..., 1, 0])
    return 0.5 * (a + d) - np.sqrt(0.25 * (a - d) ** 2 + k * k)


def _dets(c):
    c = np.asarray(c, dtype=float)
    da = np.linalg.det(c[..., :2, :2])
    db = np.linalg.det(c[..., 2:, 2:])
    dk = np.linalg.det(c[..., :2, 2:])
    return da, db, dk, np.linalg.det(c)


def logarithmic_negativity(c):
    """E_N = max(0, -ln 2 nu), nu the smaller symplectic eigenvalue of the partial transpose.

    The partial transpose flips the sign of the cavity Y quadrature; its
    symplectic spectrum equals the closed form through
    detA + detB - 2 detK, evaluated here in a cancellation-free way.
    """
    c = np.asarray(c, dtype=float)
    da, db, dk, dc = _dets(c)
    sig = da + db - 2.0 * dk
    if np.any(sig * sig - 4.0 * dc < -1e-9 * np.maximum(sig * sig, 1.0)):
        raise NumericalFailureError("unphysical covariance: negative discriminant in E_N")
    flip = np.array([1.0, 1.0, 1.0, -1.0])
    nu, _ = symplectic_eigenvalues(c * flip[:, None] * flip[None, :])
    with np.errstate(divide="ignore"):
        en = -np.log(2.0 * nu)
    return np.maximum(en, 0.0)


def _f(x):
    x = np.asarray(x, dtype=float)
    p = 0.5 * (x + 1.0)
    m = np.maximum(0.5 * (x - 1.0), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        tm = np.where(m > 0, m * np.log2(np.where(m > 0, m, 1.0)), 0.0)
    return p * np.log2(p) - tm


def _resolved_sqrt(*terms):
    """sqrt of a sum that vanishes exactly for pure states.

    A sum below the rounding resolution of its terms is taken as zero, so
    the square root does not blow 1e-16 noise up to 1e-8.
    """
    total = sum(terms)
    scale = sum(np.abs(t) for t in terms)
    return np.sqrt(np.where(total > 64.0 * np.finfo(float).eps * scale, total, 0.0))


def gaussian_discord(c, measured: str = "cavity"):
    """Gaussian discord with a Gaussian measurement on ``measured`` (cavity or mirror)."""
    c = 2.0 * np.asarray(c, dtype=float)
    if measured == "mirror":
        perm = [2, 3, 0, 1]
        c = c[..., perm, :][..., :, perm]
    elif measured != "cavity":
        raise InvalidParameterError(f"measured must be 'cavity' or 'mirror', got {measured!r}")
    a, b, kd, dd = _dets(c)
    nm, npl = symplectic_eigenvalues(0.5 * c)
    nm, npl = 2.0 * nm, 2.0 * npl
    if np.any(nm < 1.0 - 2e-9):
        raise NumericalFailureError("unphysical covariance: symplectic eigenvalue below vacuum")
    first = (dd - a * b) ** 2 <= (1.0 + b) * kd * kd * (a + dd)
    bm1 = b - 1.0
    root = _resolved_sqrt(kd * kd, bm1 * (dd - a))
    with np.errstate(divide="ignore", invalid="ignore"):
        e1 = (2.0 * kd * kd + bm1 * (dd - a) + 2.0 * np.abs(kd) * root) / (bm1 * bm1)
        # at B = 1 the first branch reduces to its continuous limit A (no information gain)
        e1 = np.where(np.abs(bm1) < 1e-12, a, e1)
        e2 = (a * b - kd * kd + dd - _resolved_sqrt(
            kd ** 4, (dd - a * b) ** 2, -2.0 * kd * kd * (a * b + dd))) / (2.0 * b)
    emin = np.where(first, e1, e2)
    d = _f(np.sqrt(b)) - _f(nm) - _f(npl) + _f(np.sqrt(np.maximum(emin, 1.0)))
    return np.maximum(d, 0.0)


@dataclass(frozen=True)
class MetricsSummary:
    n_max: float
    en_max: float
    d_max: float
    qvar_min: float
    xvar_min: float
    arg_times: dict

    FIELDS = ("n_max", "en_max", "d_max", "qvar_min", "xvar_min")

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in self.FIELDS)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conventions"] = dict(CONVENTIONS)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def csv_row(self) -> list[str]:
        return [repr(float(v)) for v in self.values()] + [
            repr(float(self.arg_times[f])) for f in self.FIELDS]


def _refine(t, v, k, sign):
    """Parabolic refinement of a periodic grid extremum at index k."""
    n = v.size
    if n < 3:
        return float(v[k]), float(t[k])
    y0, y1, y2 = v[(k - 1) % n], v[k], v[(k + 1) % n]
    den = y0 - 2.0 * y1 + y2
    if den == 0.0 or sign * den > 0:
        return float(y1), float(t[k])
    x = 0.5 * (y0 - y2) / den
    if abs(x) > 1.0:
        return float(y1), float(t[k])
    dt = t[1] - t[0]
    return float(y1 - 0.25 * (y0 - y2) * x), float((t[k] + x * dt) % (dt * n))


def metric_samples(matrices, measured: str = "cavity") -> dict[str, np.ndarray]:
    return {
        "n_max": phonon_number(matrices),
        "en_max": logarithmic_negativity(matrices),
        "d_max": gaussian_discord(matrices, measured),
        "qvar_min": min_quadrature_variance(matrices, "mirror"),
        "xvar_min": min_quadrature_variance(matrices, "cavity"),
    }


def period_extrema(orbit: CovOrbit, measured: str = "cavity") -> MetricsSummary:
    samples = metric_samples(orbit.matrices, measured)
    vals, args = {}, {}
    for name, v in samples.items():
        sign = 1.0 if name.endswith("_max") else -1.0
        k = int(np.argmax(sign * v))
        vals[name], args[name] = _refine(orbit.times, v, k, sign)
    return MetricsSummary(arg_times=args, **vals)
