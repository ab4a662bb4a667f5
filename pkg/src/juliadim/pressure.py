"""Geometric pressure from preimage trees and the dimension estimate.

The n-th pressure iterate at base x sums |(f^n)'(v)|^{-t} over the d^n
preimages v of x.  Trees are expanded level by level with the batched
root solver; the per-node derivative moduli accumulate multiplicatively,
so a single tree prices every (t, n <= depth) pair.  Sums use math.fsum,
which is exactly rounded and therefore reproducible regardless of
evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .components import PolyLikeRestriction
from .errors import (
    EmptyTree,
    NearCriticalValue,
    NoBracket,
    PostCriticalBase,
)
from .escape import DynSetup
from .polynomial import Polynomial, critical_points, preimage_roots

_LEAF_BUDGET = 2_000_000
_CRITICAL_LEAF_TOL = 1e-12
_POST_CRITICAL_TOL = 1e-6
_ORBIT_BLOWUP = 1e9

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class PreimageTree:
    """All preimages of the base up to the requested depth.

    levels[n] holds (points, dmod) for the d^n preimages at depth n,
    where dmod[i] = |(f^n)'(points[i])|.  Leaf order is deterministic:
    children are sorted by (angle, modulus) under each parent.
    """

    p: Polynomial
    base: complex
    depth: int
    levels: tuple
    flagged_leaves: int

    @property
    def leaves(self):
        return self.levels[-1]


def preimage_tree(p: Polynomial, x: complex, n: int,
                  leaf_budget: int = _LEAF_BUDGET) -> PreimageTree:
    """Expand the full backward tree of depth n below x."""
    d = p.degree
    if d < 1 or n < 0:
        raise ValueError("need degree >= 1 and depth >= 0")
    if d**n > leaf_budget:
        raise ValueError(f"leaf count {d**n} exceeds budget {leaf_budget}")
    dp = p.derivative()
    pts = np.array([x], dtype=np.complex128)
    dmod = np.ones(1, dtype=np.float64)
    levels = [(pts, dmod)]
    flagged = 0
    for _ in range(n):
        pts = preimage_roots(p, pts).reshape(-1)
        local = np.abs(dp(pts))
        flagged += int(np.count_nonzero(local < _CRITICAL_LEAF_TOL))
        dmod = local * np.repeat(dmod, d)
        levels.append((pts, dmod))
    return PreimageTree(p, complex(x), n, tuple(levels), flagged)


def post_critical_distance(p: Polynomial, x: complex, n: int) -> float:
    """Distance from x to the forward critical orbits, n steps deep."""
    best = math.inf
    for c, _ in critical_points(p):
        v = complex(c)
        for _ in range(n + 1):
            best = min(best, abs(v - x))
            if abs(v) > _ORBIT_BLOWUP:
                break
            v = p(v)
    return best


def assert_valid_base(p: Polynomial, x: complex, n: int) -> None:
    dist = post_critical_distance(p, x, n)
    if dist < _POST_CRITICAL_TOL:
        raise PostCriticalBase(
            f"base {x} is within {dist:.2e} of a forward critical orbit"
        )


@dataclass(frozen=True)
class PressureEstimate:
    """Finite-depth pressure sequence and its tail summary."""

    t: float
    base: complex
    values: tuple          # P_n for n = 1..depth
    value: float           # mean of the last three entries
    dispersion: float      # max - min over the last three entries
    depth: int
    leaves: int


def _level_pressure(level, t: float, n: int) -> float:
    _, dmod = level
    if t == 0.0:
        return math.log(dmod.size) / n
    terms = dmod ** (-t)
    return math.log(math.fsum(terms.tolist())) / n


def estimate_from_tree(tree: PreimageTree, t: float) -> PressureEstimate:
    """Price an existing tree at exponent t."""
    if t > 0 and tree.flagged_leaves:
        raise NearCriticalValue(
            f"{tree.flagged_leaves} leaves sit on critical values; "
            "the t>0 sum would be dominated by them"
        )
    vals = [
        _level_pressure(tree.levels[n], t, n) for n in range(1, tree.depth + 1)
    ]
    tail = vals[-3:] if len(vals) >= 3 else vals
    value = sum(tail) / len(tail)
    dispersion = max(tail) - min(tail)
    d = tree.p.degree
    if t == 0.0 and abs(value - math.log(d)) > 1e-12:
        raise AssertionError("t=0 entry must equal log d; leaf count corrupt")
    return PressureEstimate(
        t=t,
        base=tree.base,
        values=tuple(vals),
        value=value,
        dispersion=dispersion,
        depth=tree.depth,
        leaves=tree.leaves[0].size,
    )


def pressure_estimate(p: Polynomial, t: float, x: complex, N: int,
                      leaf_budget: int = _LEAF_BUDGET) -> PressureEstimate:
    """P_n sequence for n = 1..N at base x, tail-averaged."""
    assert_valid_base(p, x, N)
    tree = preimage_tree(p, x, N, leaf_budget)
    return estimate_from_tree(tree, t)


@dataclass(frozen=True)
class BowenZero:
    """Bisection output for the first zero of the pressure estimate."""

    t_star: float
    t_lo: float
    t_hi: float
    depth: int
    p_lo: float
    p_hi: float


def bowen_zero(p: Polynomial, x: complex, N: int, t_lo: float, t_hi: float,
               tol_t: float = 1e-3, leaf_budget: int = _LEAF_BUDGET) -> BowenZero:
    """Bisect the depth-N pressure estimate in t.

    The finite-depth estimate inherits monotonicity in t when leaf
    moduli exceed one, so only sign changes are consulted.
    """
    assert_valid_base(p, x, N)
    tree = preimage_tree(p, x, N, leaf_budget)
    p_lo = estimate_from_tree(tree, t_lo).value
    p_hi = estimate_from_tree(tree, t_hi).value
    if not (p_lo > 0.0 > p_hi):
        raise NoBracket(
            f"pressure at t={t_lo} is {p_lo:.4g} and at t={t_hi} is "
            f"{p_hi:.4g}; they do not straddle zero"
        )
    lo, hi = t_lo, t_hi
    while hi - lo > tol_t:
        mid = 0.5 * (lo + hi)
        if estimate_from_tree(tree, mid).value > 0.0:
            lo = mid
        else:
            hi = mid
    return BowenZero(0.5 * (lo + hi), lo, hi, N, p_lo, p_hi)


def _collar(mask: np.ndarray) -> np.ndarray:
    """One-pixel tolerance collar around a pixel set."""
    return ndimage.binary_dilation(mask, structure=_CROSS)


def _prune_to_mask(pts, dmod, restriction, mask):
    rows, cols, inside = restriction.box.locate(
        pts, restriction.width, restriction.height
    )
    keep = inside.copy()
    keep[inside] = mask[rows[inside], cols[inside]]
    return pts[keep], dmod[keep]


def restricted_Ln_sequence(setup: DynSetup, restriction: PolyLikeRestriction,
                           x: complex, n_max: int):
    """log sums of |(F^n)'|^{-1} over branches staying in the restriction.

    Pullback roots outside the level-(m+1) pixel set (one-pixel collar)
    are pruned at every step, which realizes F = f restricted to the
    inner domain.  Returns [L_1, ..., L_n_max].
    """
    rows, cols, inside = restriction.box.locate(
        np.array([x]), restriction.width, restriction.height
    )
    if not inside[0] or not _collar(restriction.mask_m)[rows[0], cols[0]]:
        raise ValueError(f"base {x} is outside the level-m component")
    mask = _collar(restriction.mask_m1)
    dp = setup.p.derivative()
    pts = np.array([x], dtype=np.complex128)
    dmod = np.ones(1, dtype=np.float64)
    out = []
    d = setup.p.degree
    for _ in range(n_max):
        pts = preimage_roots(setup.p, pts).reshape(-1)
        dmod = np.abs(dp(pts)) * np.repeat(dmod, d)
        pts, dmod = _prune_to_mask(pts, dmod, restriction, mask)
        if pts.size == 0:
            raise EmptyTree(
                "all branches pruned; the restriction mask is too coarse"
            )
        out.append(math.log(math.fsum((1.0 / dmod).tolist())))
    return out


def restricted_Ln(setup: DynSetup, restriction: PolyLikeRestriction,
                  x: complex, n: int) -> float:
    return restricted_Ln_sequence(setup, restriction, x, n)[-1]


def sample_annulus_points(restriction: PolyLikeRestriction,
                          exclude_mask: np.ndarray, count: int,
                          p: Polynomial, orbit_depth: int = 20):
    """Deterministic pixel centers in the level-m set minus the core.

    Points too close to forward critical orbits are skipped so that the
    restricted sums stay finite.
    """
    mask = restriction.mask_m & ~exclude_mask
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise ValueError("no pixels between the level-m set and the core")
    px, py = restriction.box.pitches(restriction.width, restriction.height)
    xs = restriction.box.re_min + (cols + 0.5) * px
    ys = restriction.box.im_max - (rows + 0.5) * py
    pts = xs + 1j * ys
    stride = max(1, pts.size // (4 * count))
    chosen = []
    for z in pts[::stride]:
        if post_critical_distance(p, complex(z), orbit_depth) < 1e-3:
            continue
        chosen.append(complex(z))
        if len(chosen) == count:
            break
    if len(chosen) < count:
        raise ValueError(f"only {len(chosen)} usable sample points found")
    return chosen


@dataclass(frozen=True)
class C0Record:
    """Measured uniform lower bound for the restricted log sums."""

    c0: float
    min_Ln: float
    attained_x: complex
    attained_n: int
    n_max: int
    samples: int


def estimate_C0(setup: DynSetup, restriction: PolyLikeRestriction,
                sample_xs, n_max: int) -> C0Record:
    """C0 = max(0, -min L_n) over the sample protocol."""
    if len(sample_xs) < 1:
        raise ValueError("need at least one sample point")
    best = math.inf
    arg_x, arg_n = None, -1
    for x in sample_xs:
        seq = restricted_Ln_sequence(setup, restriction, x, n_max)
        for i, val in enumerate(seq):
            if val < best:
                best = val
                arg_x, arg_n = x, i + 1
    return C0Record(
        c0=max(0.0, -best),
        min_Ln=best,
        attained_x=arg_x,
        attained_n=arg_n,
        n_max=n_max,
        samples=len(sample_xs),
    )
