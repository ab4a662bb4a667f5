"""Complex polynomial arithmetic and simultaneous root finding.

Everything downstream (escape classification, preimage trees, pressure
sums) funnels through this module, so the root solver is written to run
on large batches of targets at once: solving p(w) = x for a million
values of x is one vectorized Aberth-Ehrlich iteration, not a million
scalar solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import NonConvergence, RootFailure

# Fixed irrational rotation applied to the initial root circle so that
# symmetric root constellations never coincide with the start points.
_GOLDEN = 0.6180339887498949
_ABERTH_CAP = 80
_OVERFLOW_GUARD = 1e150


@dataclass(frozen=True)
class Polynomial:
    """Polynomial with complex coefficients, indexed by ascending power."""

    coeffs: np.ndarray

    def __init__(self, coeffs):
        arr = np.atleast_1d(np.asarray(coeffs, dtype=np.complex128)).copy()
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coefficients must be a non-empty 1-d sequence")
        # strip trailing zero coefficients but keep at least the constant
        last = arr.size - 1
        while last > 0 and arr[last] == 0:
            last -= 1
        arr = arr[: last + 1]
        if arr.size > 1 and arr[-1] == 0:
            raise ValueError("leading coefficient must be nonzero")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        """Horner evaluation; accepts scalars or numpy arrays."""
        if np.isscalar(z) or isinstance(z, complex):
            acc = complex(0)
            for a in self.coeffs[::-1]:
                acc = acc * z + a
            return acc
        z = np.asarray(z, dtype=np.complex128)
        acc = np.full(z.shape, self.coeffs[-1], dtype=np.complex128)
        for a in self.coeffs[-2::-1]:
            acc = acc * z + a
        return acc

    def derivative(self) -> "Polynomial":
        """Formal derivative; degree 0 constant when this is affine."""
        if self.degree == 0:
            return Polynomial([0.0])
        k = np.arange(1, self.coeffs.size)
        return Polynomial(self.coeffs[1:] * k)

    def cauchy_bound(self) -> float:
        """All roots lie in |z| <= 1 + max |a_i / a_d|."""
        if self.degree == 0:
            return 1.0
        lead = abs(self.coeffs[-1])
        return 1.0 + float(np.max(np.abs(self.coeffs[:-1])) / lead)

    def __repr__(self):
        terms = ", ".join(f"{c:.6g}" for c in self.coeffs)
        return f"Polynomial([{terms}])"


def power(d: int) -> Polynomial:
    """The monomial z^d."""
    c = np.zeros(d + 1, dtype=np.complex128)
    c[-1] = 1.0
    return Polynomial(c)


def orbit_derivative(p: Polynomial, z: complex, n: int):
    """Return (p^n(z), product of p'(p^j(z)) for j < n).

    The second entry is the chain-rule derivative of the n-th iterate at
    z.  When the orbit grows past the overflow guard both entries become
    inf sentinels rather than silently wrong finite numbers.
    """
    if n < 0:
        raise ValueError("iterate count must be >= 0")
    dp = p.derivative()
    w = complex(z)
    deriv = complex(1.0)
    for _ in range(n):
        if abs(w.real) > _OVERFLOW_GUARD or abs(w.imag) > _OVERFLOW_GUARD:
            return complex(math.inf, 0.0), complex(math.inf, 0.0)
        deriv *= dp(w)
        w = p(w)
    return w, deriv


def _sorted_rows(roots_arr: np.ndarray) -> np.ndarray:
    """Sort each row by (angle, modulus) for a deterministic branch order."""
    ang = np.angle(roots_arr)
    mod = np.abs(roots_arr)
    order = np.lexsort((mod, ang), axis=-1)
    return np.take_along_axis(roots_arr, order, axis=-1)


def _aberth_core(w: np.ndarray, eval_fn, tol: float):
    """Aberth-Ehrlich until every row is stationary; returns (w, all_ok).

    w has shape (B, d); eval_fn(wv, idx) returns (p(wv), p'(wv)) for the
    rows listed in idx.  Rows are retired from the active set as soon as
    their largest relative correction drops below tol.
    """
    B, d = w.shape
    active = np.arange(B)
    for _ in range(_ABERTH_CAP):
        wa = w[active]
        pv, dv = eval_fn(wa, active)
        dv = np.where(dv == 0, 1e-300, dv)
        ratio = pv / dv
        s = np.zeros_like(wa)
        for k in range(d):
            for j in range(d):
                if j != k:
                    diff = wa[:, k] - wa[:, j]
                    diff = np.where(diff == 0, 1e-300, diff)
                    s[:, k] += 1.0 / diff
        denom = 1.0 - ratio * s
        denom = np.where(denom == 0, 1e-300, denom)
        corr = ratio / denom
        wa = wa - corr
        w[active] = wa
        rel = np.max(np.abs(corr) / (1.0 + np.abs(wa)), axis=1)
        active = active[rel > tol]
        if active.size == 0:
            return w, True
    return w, False


def preimage_roots(p: Polynomial, targets, tol: float = 1e-13) -> np.ndarray:
    """Solve p(w) = x for every x in targets.

    Returns an array of shape targets.shape + (d,), each row sorted by
    (angle, modulus).  This is the batched kernel behind preimage trees
    and level-set pullbacks.
    """
    x = np.atleast_1d(np.asarray(targets, dtype=np.complex128)).ravel()
    d = p.degree
    if d < 1:
        raise ValueError("need degree >= 1 to invert")
    lead = abs(p.coeffs[-1])
    inner = float(np.max(np.abs(p.coeffs[1:-1]))) if d > 1 else 0.0
    radius = 1.0 + np.maximum(np.abs(p.coeffs[0] - x), inner) / lead

    k = np.arange(d)
    angles = 2.0 * np.pi * (k / d + _GOLDEN)
    w = radius[:, None] * np.exp(1j * angles)[None, :]

    dp = p.derivative()

    def eval_fn(wv, idx):
        return p(wv) - x[idx, None], dp(wv)

    w, _ = _aberth_core(w, eval_fn, tol)
    # Newton polish sharpens simple roots to full float precision
    for _ in range(2):
        pv = p(w) - x[:, None]
        dv = dp(w)
        dv = np.where(dv == 0, 1e-300, dv)
        w = w - pv / dv

    resid = np.abs(p(w) - x[:, None])
    wm = np.maximum(1.0, np.abs(w))
    scale = np.zeros(w.shape, dtype=np.float64)
    for i, a in enumerate(p.coeffs):
        scale += abs(a) * wm**i
    scale += np.abs(x)[:, None]
    bad = resid > 1e-6 * scale
    if np.any(bad):
        raise RootFailure(
            f"{int(bad.sum())} of {bad.size} preimage roots failed the residual check"
        )
    out = _sorted_rows(w)
    shape = np.shape(targets)
    return out.reshape(shape + (d,)) if shape else out[0]


def roots(p: Polynomial, tol: float = 1e-9, precision: str = "double"):
    """All roots of p with multiplicities, as a list of (root, mult).

    Simultaneous Aberth-Ehrlich iteration from a perturbed circle, Newton
    polish, then clustering: roots closer than 1e-9 times the Cauchy
    bound merge into one multiple root.  precision="extended" re-polishes
    simple roots with 32-digit Newton steps.
    """
    d = p.degree
    if d < 1:
        raise ValueError("need degree >= 1")
    radius = p.cauchy_bound()
    k = np.arange(d)
    angles = 2.0 * np.pi * (k / d + _GOLDEN)
    w = np.array(radius * np.exp(1j * angles), dtype=np.complex128)[None, :]

    dp = p.derivative()

    def eval_fn(wv, idx):
        return p(wv), dp(wv)

    w, ok = _aberth_core(w, eval_fn, tol=1e-13)
    for _ in range(2):
        pv = p(w)
        dv = dp(w)
        dv = np.where(dv == 0, 1e-300, dv)
        w = w - pv / dv
    w = w[0]

    wmax = max(1.0, float(np.max(np.abs(w))))
    scale = sum(abs(a) * wmax**i for i, a in enumerate(p.coeffs))
    resid = np.abs(p(w))
    if not ok and np.any(resid > tol * max(1.0, scale)):
        raise NonConvergence("root iteration stalled; retry with precision='extended'")

    merged = _merge_clusters(w, 1e-9 * max(1.0, radius))
    if precision == "extended":
        merged = [(_newton_mp(p, r) if m == 1 else r, m) for r, m in merged]
    return merged


def _merge_clusters(w: np.ndarray, eps: float):
    """Greedy proximity clustering; returns [(mean, count)] sorted by angle."""
    pts = sorted(w.tolist(), key=lambda z: (np.angle(z), abs(z)))
    clusters: list[list[complex]] = []
    for z in pts:
        for c in clusters:
            if abs(z - c[0]) <= eps:
                c.append(z)
                break
        else:
            clusters.append([z])
    out = [(sum(c) / len(c), len(c)) for c in clusters]
    out.sort(key=lambda rm: (np.angle(rm[0]), abs(rm[0])))
    return out


def _newton_mp(p: Polynomial, z0: complex, dps: int = 32) -> complex:
    """High-precision Newton polish of a simple root."""
    with mpmath.workdps(dps):
        cs = [mpmath.mpc(c) for c in p.coeffs[::-1]]
        dcs = [mpmath.mpc(c) for c in p.derivative().coeffs[::-1]]
        z = mpmath.mpc(z0)
        for _ in range(10):
            pv = mpmath.polyval(cs, z)
            dv = mpmath.polyval(dcs, z)
            if dv == 0:
                break
            step = pv / dv
            z -= step
            if abs(step) < mpmath.mpf(10) ** (-dps + 2):
                break
        return complex(z)


def critical_points(p: Polynomial, tol: float = 1e-9):
    """Roots of p' with multiplicities: d-1 points counted with multiplicity."""
    if p.degree < 2:
        raise ValueError("need degree >= 2 for critical points")
    return roots(p.derivative(), tol=tol)
