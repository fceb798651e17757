"""Sampled functions on the box [-L, L)^n and their norms.

Samples sit on the lattice ``x_i = -L + i h`` with ``h = 2L / N``; each
sample stands for the cell of width h centred on it, so integrals are the
midpoint rule ``h^n * sum``.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .errors import DomainError, NumericError
from .young import YoungFunction, values_saturating

_MAGIC = b"ORLZGRD1"
_HEADER = struct.Struct("<8sqqd")       # magic, dim, N, L  -> 32 bytes


@dataclass(frozen=True)
class GridFunction:
    dim: int
    half_width: float
    points_per_axis: int
    samples: np.ndarray

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError("dim must be 1, 2 or 3")
        n = self.points_per_axis
        if n < 2 or n & (n - 1):
            raise DomainError("points_per_axis must be a power of two, got %d" % n)
        if not self.half_width > 0:
            raise DomainError("half_width must be positive")
        arr = np.asarray(self.samples, dtype=float)
        if arr.shape != (n,) * self.dim:
            raise DomainError("samples have shape %s, expected %s" % (arr.shape, (n,) * self.dim))
        if not np.all(np.isfinite(arr)):
            raise DomainError("samples must be finite")
        object.__setattr__(self, "samples", arr)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.points_per_axis)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        ax = self.axis()
        return tuple(np.meshgrid(*([ax] * self.dim), indexing="ij"))

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c ** 2 for c in self.coordinates()))

    def with_samples(self, samples: np.ndarray) -> "GridFunction":
        return GridFunction(self.dim, self.half_width, self.points_per_axis, samples)

    def integral(self) -> float:
        return float(self.cell_volume * np.sum(self.samples))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, c: float) -> "GridFunction":
        return self.with_samples(self.samples * c)

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return self.with_samples(-self.samples)


def from_function(func: Callable[..., np.ndarray], dim: int, half_width: float,
                  points: int) -> GridFunction:
    """Sample ``func(x1, ..., xn)`` on the lattice."""
    empty = GridFunction(dim, half_width, points, np.zeros((points,) * dim))
    return empty.with_samples(np.asarray(func(*empty.coordinates()), dtype=float)
                              * np.ones((points,) * dim))


def radial(func: Callable[[np.ndarray], np.ndarray], dim: int, half_width: float,
           points: int) -> GridFunction:
    """Sample ``func(|x|)``."""
    empty = GridFunction(dim, half_width, points, np.zeros((points,) * dim))
    return empty.with_samples(func(empty.radius()))


def indicator_ball(r: float, dim: int, half_width: float, points: int) -> GridFunction:
    """Samples of the indicator of the closed ball of radius r."""
    return radial(lambda rad: (rad <= r).astype(float), dim, half_width, points)


def heat_kernel_samples(t: float, dim: int, half_width: float, points: int) -> GridFunction:
    """``(4 pi t)^{-n/2} exp(-|x|^2 / 4t)`` on the lattice."""
    return radial(lambda rad: (4 * math.pi * t) ** (-dim / 2) * np.exp(-rad ** 2 / (4 * t)),
                  dim, half_width, points)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def sup_norm(u: GridFunction) -> float:
    return float(np.max(np.abs(u.samples)))


def lebesgue_norm(u: GridFunction, q: float) -> float:
    if math.isinf(q):
        return sup_norm(u)
    return float((u.cell_volume * np.sum(np.abs(u.samples) ** q)) ** (1.0 / q))


def modular(u: GridFunction, phi: YoungFunction, k: float) -> float:
    """``h^n * sum Phi(|u_i| / k)``; infinite as soon as one term is."""
    if not k > 0:
        raise DomainError("modular needs k > 0")
    vals = values_saturating(phi, np.abs(u.samples) / k)
    if np.any(np.isinf(vals)):
        return math.inf
    return float(u.cell_volume * np.sum(vals))


def luxemburg_norm(u: GridFunction, phi: YoungFunction, rtol: float = 1e-10) -> float:
    """``inf{k > 0 : modular(u, phi, k) <= 1}`` by bisection.

    The bracket starts at ``||u||_inf`` and is widened by doubling/halving.
    """
    s = sup_norm(u)
    if s == 0:
        return 0.0
    k_hi = s
    while modular(u, phi, k_hi) > 1.0:
        k_hi *= 2.0
        if k_hi > 1e16 * s:
            raise NumericError("modular stays above 1 for every k up to 1e16 * sup|u| (%s)"
                               % phi.label)
    k_lo = k_hi
    while True:
        k_lo *= 0.5
        if k_lo < 1e-300:
            return 0.0
        if modular(u, phi, k_lo) > 1.0:
            break
        k_hi = k_lo
    for _ in range(200):
        if k_hi - k_lo <= rtol * k_hi:
            break
        mid = 0.5 * (k_lo + k_hi)
        if modular(u, phi, mid) > 1.0:
            k_lo = mid
        else:
            k_hi = mid
    return k_hi


Norm = Union[YoungFunction, str]


def norm(u: GridFunction, which: Norm) -> float:
    """Luxemburg norm for a Young's function, or ``"inf"`` for the sup norm."""
    if isinstance(which, str):
        if which in ("inf", "linf-marker"):
            return sup_norm(u)
        raise ValueError("unknown norm marker %r" % which)
    return luxemburg_norm(u, which)


# ---------------------------------------------------------------------------
# input / output
# ---------------------------------------------------------------------------

def save_binary(u: GridFunction, path: Union[str, Path]) -> None:
    """32-byte little-endian header (magic, dim, N, L) followed by float64 samples."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, u.dim, u.points_per_axis, u.half_width))
        fh.write(np.ascontiguousarray(u.samples, dtype="<f8").tobytes())


def load_binary(path: Union[str, Path]) -> GridFunction:
    raw = Path(path).read_bytes()
    magic, dim, n, half_width = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError("%s is not a grid file" % path)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return GridFunction(int(dim), float(half_width), int(n), data.reshape((n,) * dim).copy())


def save_csv(u: GridFunction, path: Union[str, Path]) -> None:
    if u.dim != 1:
        raise DomainError("CSV export is for 1D grids")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u"])
        for x, v in zip(u.axis(), u.samples):
            w.writerow([repr(float(x)), repr(float(v))])


def load_csv(path: Union[str, Path]) -> GridFunction:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    x = np.array([float(r["x"]) for r in rows])
    vals = np.array([float(r["u"]) for r in rows])
    h = x[1] - x[0]
    return GridFunction(1, len(x) * h / 2.0, len(x), vals)
