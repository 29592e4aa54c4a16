"""Hyperbolic geometry on products of the upper half-plane.

The functions accept either :class:`HalfPlaneVector` instances or plain
complex arrays whose last axis runs over labels; the array form is what the
solvers use internally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AlphabetMismatch, DegenerateDifference

# smallest imaginary part accepted at construction (subnormal guard)
IM_FLOOR = 1e-300


class HalfPlaneVector:
    """One point of the upper half-plane per label."""

    __slots__ = ("values", "labels")

    def __init__(self, values, labels=None):
        vals = np.atleast_1d(np.asarray(values, dtype=np.complex128)).copy()
        if vals.ndim != 1:
            raise ValueError("HalfPlaneVector takes a 1-d sequence of values")
        if not np.all(vals.imag > IM_FLOOR):
            raise ValueError(f"all imaginary parts must be positive, got {vals}")
        vals.setflags(write=False)
        if labels is not None:
            labels = tuple(labels)
            if len(labels) != vals.size:
                raise AlphabetMismatch(f"{len(labels)} labels for {vals.size} values")
        self.values = vals
        self.labels = labels

    def __len__(self):
        return self.values.size

    def __getitem__(self, key):
        if self.labels is not None and key in self.labels:
            return complex(self.values[self.labels.index(key)])
        return complex(self.values[key])

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __repr__(self):
        if self.labels is None:
            return f"HalfPlaneVector({self.values.tolist()})"
        inner = ", ".join(f"{lab}: {val:.6g}" for lab, val in zip(self.labels, self.values))
        return f"HalfPlaneVector({{{inner}}})"


def _pair(g, h):
    """Unwrap two arguments to arrays, checking alphabets when both carry labels."""
    g_labels = getattr(g, "labels", None)
    h_labels = getattr(h, "labels", None)
    g = np.asarray(getattr(g, "values", g), dtype=np.complex128)
    h = np.asarray(getattr(h, "values", h), dtype=np.complex128)
    if g_labels is not None and h_labels is not None and g_labels != h_labels:
        raise AlphabetMismatch(f"{g_labels} vs {h_labels}")
    if g.shape[-1:] != h.shape[-1:] and g.ndim and h.ndim:
        raise AlphabetMismatch(f"vectors of length {g.shape[-1]} and {h.shape[-1]}")
    return g, h


def gamma(g, h):
    """``|g - h|**2 / (Im g * Im h)`` elementwise."""
    g = np.asarray(g, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    diff = g - h
    out = (diff.real**2 + diff.imag**2) / (g.imag * h.imag)
    return out if out.ndim else float(out)


def gamma_A(g, h):
    """Maximum of :func:`gamma` over the label axis."""
    g, h = _pair(g, h)
    out = np.max(gamma(g, h), axis=-1)
    return out if np.ndim(out) else float(out)


def arccosh_clamped(x):
    """``log(x + sqrt(x**2 - 1))`` with the argument clamped to ``>= 1``."""
    x = np.maximum(np.asarray(x, dtype=np.float64), 1.0)
    out = np.log(x + np.sqrt((x - 1.0) * (x + 1.0)))
    return out if out.ndim else float(out)


def dist_from_gamma(gam):
    return arccosh_clamped(0.5 * np.asarray(gam) + 1.0)


def dist(g, h):
    """Product hyperbolic metric: ``arccosh(gamma_A / 2 + 1)``."""
    return dist_from_gamma(gamma_A(g, h))


def hyperbolic_distance(a, b):
    """Standard Poincare distance between two points of the upper half-plane."""
    return dist_from_gamma(gamma(a, b))


def wrap_angle(x):
    """Map real angles into ``(-pi, pi]``."""
    x = np.asarray(x, dtype=np.float64)
    out = math.pi - np.mod(math.pi - x, 2.0 * math.pi)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CircleAngle:
    """Element of R/2piZ stored as its representative in ``(-pi, pi]``."""

    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", wrap_angle(float(self.value)))

    @property
    def magnitude(self) -> float:
        """Distance to 0 on the circle, in ``[0, pi]``."""
        return abs(self.value)

    def __add__(self, other):
        return CircleAngle(self.value + float(getattr(other, "value", other)))

    def __neg__(self):
        return CircleAngle(-self.value)

    def __sub__(self, other):
        return self + (-CircleAngle(float(getattr(other, "value", other))))


def alpha(g, h, k, l) -> CircleAngle:
    """Angle ``arg((g_k - h_k) * conj(g_l - h_l))``.

    ``k`` and ``l`` are positions, or labels when ``g`` carries labels.

    Raises
    ------
    DegenerateDifference
        If ``g_k == h_k`` or ``g_l == h_l``.
    """
    labels = getattr(g, "labels", None) or getattr(h, "labels", None)
    if labels is not None:
        k = labels.index(k) if k in labels else k
        l = labels.index(l) if l in labels else l
    g, h = _pair(g, h)
    dk = g[..., k] - h[..., k]
    dl = g[..., l] - h[..., l]
    if np.any(dk == 0) or np.any(dl == 0):
        raise DegenerateDifference(f"zero difference in component {k if np.any(dk == 0) else l}")
    return CircleAngle(float(np.angle(dk * np.conj(dl))))


def alpha_matrix(g, h):
    """All pairwise angles ``alpha_{k,l}`` as an array; NaN where a difference vanishes."""
    g, h = _pair(g, h)
    d = g - h
    prod = d[..., :, None] * np.conj(d[..., None, :])
    out = np.angle(prod)
    zero = (d == 0)
    out = np.where(zero[..., :, None] | zero[..., None, :], np.nan, out)
    return out


def point_at_distance(center, distance, direction):
    """Point of the upper half-plane at hyperbolic ``distance`` from ``center``.

    ``direction`` is an angle in radians; the disc point ``tanh(d/2) e^{i theta}``
    is carried to the half-plane by the isometry sending 0 to ``center``.
    """
    center = np.asarray(center, dtype=np.complex128)
    w = np.tanh(0.5 * np.asarray(distance)) * np.exp(1j * np.asarray(direction))
    return (center - np.conj(center) * w) / (1.0 - w)
