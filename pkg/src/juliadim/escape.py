"""Verified escape radius, orbit classification and filled-set rendering.

The escape radius R satisfies |z| >= R implies |p(z)| >= 2|z|, so the
closed preimage of the disc D(0,R) sits inside D(0,R) and the filled set
is the intersection of all its iterated preimages.  A dense boundary
sample witnesses the inequality at construction time.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import WitnessFailed
from .grid import Box, write_pgm
from .polynomial import Polynomial, critical_points

_WITNESS_SAMPLES = 4096
_WITNESS_SLACK = 1e-12  # allows the exact-equality case |z^2| = 2|z|


def escape_radius(p: Polynomial, witness: bool = True) -> float:
    """R = max(1, (2 + sum |a_i|, i<d) / |a_d|), boundary-checked.

    For |z| >= R and degree >= 2 this forces |p(z)| >= 2|z|, hence every
    bounded orbit stays strictly inside D(0,R).
    """
    if p.degree < 2:
        raise ValueError("escape radius needs degree >= 2")
    lead = abs(p.coeffs[-1])
    r = max(1.0, (2.0 + float(np.sum(np.abs(p.coeffs[:-1])))) / lead)
    if witness:
        verify_radius_witness(p, r)
    return r


def verify_radius_witness(p: Polynomial, r: float, samples: int = _WITNESS_SAMPLES):
    """Sample |z| = r densely and assert |p(z)| >= 2r (to machine slack)."""
    theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    z = r * np.exp(1j * theta)
    vals = np.abs(p(z))
    lo = float(vals.min())
    if lo < 2.0 * r * (1.0 - _WITNESS_SLACK):
        raise WitnessFailed(f"|p(z)| dipped to {lo} < 2R = {2 * r} on |z| = {r}")


@dataclass(frozen=True)
class DynSetup:
    """A polynomial together with its verified escape radius and budget."""

    p: Polynomial
    R: float = 0.0
    max_iter: int = 1000

    def __post_init__(self):
        if self.R <= 0.0:
            object.__setattr__(self, "R", escape_radius(self.p))
        else:
            verify_radius_witness(self.p, self.R)


@dataclass(frozen=True)
class OrbitClass:
    """Escaped(first exit step) or Bounded after the full budget."""

    escaped: bool
    step: int | None = None

    @classmethod
    def escaped_at(cls, k: int) -> "OrbitClass":
        return cls(True, k)

    @classmethod
    def bounded(cls) -> "OrbitClass":
        return cls(False, None)


def escape_steps(p: Polynomial, z: np.ndarray, R: float, max_iter: int) -> np.ndarray:
    """Vectorized first-exit steps: -1 for orbits that stay |.| <= R.

    Escaped points are frozen immediately, so intermediate values never
    overflow: anything still being iterated has modulus <= R.
    """
    cur = np.array(z, dtype=np.complex128)
    steps = np.full(cur.shape, -1, dtype=np.int32)
    alive = np.abs(cur) <= R
    steps[~alive] = 0
    for k in range(1, max_iter + 1):
        if not alive.any():
            break
        cur[alive] = p(cur[alive])
        esc = alive & (np.abs(cur) > R)
        steps[esc] = k
        alive &= ~esc
    return steps


def classify(setup: DynSetup, z: complex) -> OrbitClass:
    """Iterate up to max_iter; Escaped(k) at the first |f^k(z)| > R."""
    steps = escape_steps(setup.p, np.array([z]), setup.R, setup.max_iter)
    k = int(steps[0])
    return OrbitClass.bounded() if k < 0 else OrbitClass.escaped_at(k)


class Connectivity(enum.Enum):
    CONNECTED = "connected"
    DISCONNECTED = "disconnected"
    TOTALLY_DISCONNECTED = "totally_disconnected"


_CONNECTIVITY_NOTE = (
    "critical-orbit classification: all bounded is sufficient for a "
    "connected Julia set and all escaping for a totally disconnected one, "
    "but escape-based labels are sufficient conditions, not complete "
    "classifications"
)


@dataclass(frozen=True)
class ConnectivityReport:
    kind: Connectivity
    critical_orbits: tuple
    note: str = _CONNECTIVITY_NOTE


def connectivity_class(setup: DynSetup) -> ConnectivityReport:
    """Classify via critical orbits: all bounded / mixed / all escaped."""
    crits = critical_points(setup.p)
    results = []
    for c, mult in crits:
        results.append((c, mult, classify(setup, c)))
    escaped = [r for r in results if r[2].escaped]
    if not escaped:
        kind = Connectivity.CONNECTED
    elif len(escaped) == len(results):
        kind = Connectivity.TOTALLY_DISCONNECTED
    else:
        kind = Connectivity.DISCONNECTED
    return ConnectivityReport(kind, tuple(results))


@dataclass(frozen=True)
class RasterImage:
    """Escape-time raster: 0 for bounded pixels, clamp(k,1,255) otherwise."""

    box: Box
    width: int
    height: int
    values: np.ndarray

    def to_pgm(self, path, comments=()):
        write_pgm(self.values, path, comments)


def render(setup: DynSetup, box: Box, width: int, height: int,
           max_iter: int = 256) -> RasterImage:
    """Per-pixel classification at pixel centers.

    Bounded pixels are 0.  Escaped pixels store the exit step clamped to
    [1, 255]; the clamp at the low end keeps points already outside R
    distinguishable from bounded ones.
    """
    if width <= 0 or height <= 0:
        raise ValueError("raster dimensions must be positive")
    z = box.centers(width, height)
    steps = escape_steps(setup.p, z, setup.R, max_iter)
    values = np.zeros(steps.shape, dtype=np.uint8)
    esc = steps >= 0
    values[esc] = np.clip(steps[esc], 1, 255).astype(np.uint8)
    return RasterImage(box, width, height, values)
