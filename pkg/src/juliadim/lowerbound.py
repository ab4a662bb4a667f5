"""Pressure lower bound from a free system of inverse branches.

After relabeling U_0 = level-m component and U_1 = level-(m+N1)
component, one unit of backward time is N1 pullback steps of f.  A
composition is a binary word: the first unit pulls back into the side
component V (an h-step), later units choose either another h-step or an
F-step into U_1.  Because V and U_1 are disjoint, distinct words give
distinct branch families, so the total weight Lambda_N is a sub-sum of
the full preimage sum at depth N*N1 and bounds the pressure at t=1 from
below.

The enumeration carries two running audits: the smallest per-parent
h-block sum and the smallest completed F-streak sum.  The combinatorial
certificate Lambda_N >= sum_k C(N-1,k-1) (a b)^k is an arithmetic
consequence of those two minima, so the record can be checked without
trusting any sampled infimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .components import ComponentChain, PolyLikeRestriction, VBranch
from .errors import EmptyBranch, ToolkitError
from .escape import DynSetup
from .polynomial import preimage_roots

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_CHUNK = 131072


@dataclass(frozen=True)
class BranchSystem:
    """The h / F branch pair used by the composition sums."""

    setup: DynSetup
    restriction: PolyLikeRestriction
    vbranch: VBranch
    n1: int
    mask_u0: np.ndarray
    mask_u1_dil: np.ndarray
    mask_v_dil: np.ndarray
    step_masks_f: tuple      # dilated chain masks for steps 1..n1 of an F unit
    box: object
    width: int
    height: int


def build_branch_system(setup: DynSetup, chain: ComponentChain,
                        restriction: PolyLikeRestriction,
                        vbranch: VBranch) -> BranchSystem:
    """Assemble and validate the masks behind the h and F units."""
    m, n1 = restriction.m, vbranch.n1
    if chain.depth < m + n1:
        chain.extend_to(m + n1)
    v_dil = ndimage.binary_dilation(vbranch.mask, structure=_CROSS)
    steps = tuple(
        ndimage.binary_dilation(chain.mask(m + j), structure=_CROSS)
        for j in range(1, n1 + 1)
    )
    u1_dil = steps[-1]
    if np.any(vbranch.mask & ~restriction.mask_m):
        raise ToolkitError("side component must sit inside the level-m set")
    if np.any(vbranch.mask & chain.mask(m + 1)):
        raise ToolkitError("side component must avoid the level-(m+1) set")
    if np.any(v_dil & u1_dil):
        raise ToolkitError(
            "collared side component and collared inner component overlap; "
            "refine the grid"
        )
    return BranchSystem(
        setup=setup,
        restriction=restriction,
        vbranch=vbranch,
        n1=n1,
        mask_u0=restriction.mask_m,
        mask_u1_dil=u1_dil,
        mask_v_dil=v_dil,
        step_masks_f=steps,
        box=restriction.box,
        width=restriction.width,
        height=restriction.height,
    )


def _pullback_unit(sys: BranchSystem, pts, w, step_masks):
    """One backward unit: n1 single pullback steps with per-step filters.

    Returns (points, weights, parent index) for the surviving branches;
    weights are multiplied by 1/|f'| at every new point.
    """
    p = sys.setup.p
    dp = p.derivative()
    d = p.degree
    out_pts, out_w, out_src = [], [], []
    for lo in range(0, pts.size, _CHUNK):
        cur = pts[lo : lo + _CHUNK]
        curw = w[lo : lo + _CHUNK]
        src = np.arange(lo, lo + cur.size)
        for mask in step_masks:
            cur = preimage_roots(p, cur).reshape(-1)
            src = np.repeat(src, d)
            curw = np.repeat(curw, d) / np.abs(dp(cur))
            if mask is not None:
                rows, cols, inside = sys.box.locate(cur, sys.width, sys.height)
                keep = inside.copy()
                keep[inside] = mask[rows[inside], cols[inside]]
                cur, curw, src = cur[keep], curw[keep], src[keep]
        out_pts.append(cur)
        out_w.append(curw)
        out_src.append(src)
    return (
        np.concatenate(out_pts) if out_pts else np.empty(0, complex),
        np.concatenate(out_w) if out_w else np.empty(0, float),
        np.concatenate(out_src) if out_src else np.empty(0, np.int64),
    )


def _h_masks(sys: BranchSystem):
    # branches into V cross arcs thinner than a pixel; only the final
    # landing filter is enforceable
    return [None] * (sys.n1 - 1) + [sys.mask_v_dil]


def h_branch_sums(sys: BranchSystem, xs) -> np.ndarray:
    """Per-point sums over the inverse branches landing in V."""
    pts = np.asarray(xs, dtype=np.complex128).ravel()
    _, w, src = _pullback_unit(sys, pts, np.ones(pts.size), _h_masks(sys))
    sums = np.zeros(pts.size)
    np.add.at(sums, src, w)
    return sums


def measure_a(sys: BranchSystem, sample_xs) -> float:
    """a = min over samples of the h-branch derivative sum."""
    if len(sample_xs) < 1:
        raise ValueError("need at least one sample")
    sums = h_branch_sums(sys, np.array(sample_xs))
    if np.any(sums == 0.0):
        missing = int(np.count_nonzero(sums == 0.0))
        raise EmptyBranch(f"{missing} samples have no branch landing in V")
    return float(sums.min())


@dataclass(frozen=True)
class LambdaRecord:
    """Composition sum at total backward time N (in N1-step units)."""

    N: int
    n1: int
    value: float
    per_k: tuple            # weight carried by words with k h-steps
    branches: int
    a: float                # protocol value: sampled infimum of h sums
    b: float                # protocol value: exp(-C0)
    bound: float            # a b (1 + a b)^(N-1)
    a_run: float            # smallest h-block sum seen in this enumeration
    b_run: float            # smallest completed F-streak sum seen
    h_misses: int           # parents whose h-expansion lost every branch

    def audited_bound(self) -> float:
        """Certificate recomputed from the enumeration's own minima."""
        ab = self.a_run * self.b_run
        return ab * (1.0 + ab) ** (self.N - 1)


def lambda_N(sys: BranchSystem, x: complex, N: int, a: float, b: float,
             max_frontier: int = 4_000_000) -> LambdaRecord:
    """Sum exp L over all branch words of total backward time N.

    Words are explored breadth first: at each unit the current frontier
    forks into an h-extension and an F-extension (the first unit must be
    h).  Leaf weights are the derivative sums of the word's branches.
    """
    if N < 1:
        raise ValueError("need N >= 1")
    pts = np.array([x], dtype=np.complex128)
    w = np.ones(1)
    kcnt = np.zeros(1, dtype=np.int32)
    anchor = np.zeros(1, dtype=np.int64)
    anchor_w = [np.ones(1)]
    anchor_total = 1
    a_run = math.inf
    b_run = math.inf
    h_misses = 0
    f_masks = list(sys.step_masks_f)
    for step in range(1, N + 1):
        hp, hw, hsrc = _pullback_unit(sys, pts, w, _h_masks(sys))
        sums = np.zeros(pts.size)
        np.add.at(sums, hsrc, hw)
        block = sums[np.nonzero(w)[0]] / w[np.nonzero(w)[0]]
        present = block > 0
        if present.any():
            a_run = min(a_run, float(block[present].min()))
        h_misses += int(np.count_nonzero(~present))
        hk = kcnt[hsrc] + 1
        # every h-leaf opens a fresh F-streak anchored at itself
        h_anchor = anchor_total + np.arange(hp.size, dtype=np.int64)
        anchor_w.append(hw.copy())
        anchor_total += hp.size

        if step == 1:
            pts, w, kcnt, anchor = hp, hw, hk, h_anchor
        else:
            fp, fw, fsrc = _pullback_unit(sys, pts, w, f_masks)
            fk = kcnt[fsrc]
            f_anchor = anchor[fsrc]
            if fp.size:
                aw = np.concatenate(anchor_w)
                streak = np.zeros(anchor_total)
                np.add.at(streak, f_anchor, fw)
                live = streak > 0
                if live.any():
                    ratios = streak[live] / aw[live]
                    b_run = min(b_run, float(ratios.min()))
            pts = np.concatenate([hp, fp])
            w = np.concatenate([hw, fw])
            kcnt = np.concatenate([hk, fk])
            anchor = np.concatenate([h_anchor, f_anchor])
        if pts.size == 0:
            raise EmptyBranch(f"frontier died at unit {step}")
        if pts.size > max_frontier:
            raise ValueError(
                f"frontier {pts.size} exceeds budget {max_frontier} at "
                f"unit {step}; lower N"
            )
    value = math.fsum(w.tolist())
    per_k = np.zeros(N + 1)
    np.add.at(per_k, kcnt, w)
    ab = a * b
    return LambdaRecord(
        N=N,
        n1=sys.n1,
        value=value,
        per_k=tuple(per_k.tolist()),
        branches=int(w.size),
        a=a,
        b=b,
        bound=ab * (1.0 + ab) ** (N - 1),
        a_run=a_run,
        b_run=b_run if b_run < math.inf else 1.0,
        h_misses=h_misses,
    )


def binomial_certificate(N: int, ab: float) -> float:
    """sum_k C(N-1, k-1) (ab)^k, which telescopes to ab (1+ab)^(N-1)."""
    return math.fsum(
        math.comb(N - 1, k - 1) * ab**k for k in range(1, N + 1)
    )


@dataclass(frozen=True)
class LowerBoundReport:
    """Numerical evidence (not proof) that the t=1 pressure is positive."""

    a: float
    c0: float
    b: float
    n1: int
    records: tuple           # LambdaRecord per sample base
    growth_min: float        # min over samples of (1/N) log Lambda_N
    asymptote: float         # log(1 + a b)
    per_time_step: float     # asymptote / n1, in single-step units
    verdict: str


def pressure_one_lower_bound(sys: BranchSystem, sample_xs, N: int,
                             a: float, c0: float,
                             max_frontier: int = 4_000_000) -> LowerBoundReport:
    """Evaluate Lambda_N across samples and form the growth certificate."""
    b = math.exp(-c0)
    records = []
    growth = math.inf
    for x in sample_xs:
        rec = lambda_N(sys, complex(x), N, a, b, max_frontier)
        records.append(rec)
        if rec.value > 0:
            growth = min(growth, math.log(rec.value) / N)
    asym = math.log1p(a * b)
    positive = asym > 0 and growth > 0
    verdict = (
        "numerical evidence for positive pressure at t=1 "
        "(not a proof: a and C0 are sampled, not true infima)"
        if positive
        else "inconclusive: certificate did not come out positive"
    )
    return LowerBoundReport(
        a=a,
        c0=c0,
        b=b,
        n1=sys.n1,
        records=tuple(records),
        growth_min=growth,
        asymptote=asym,
        per_time_step=asym / sys.n1,
        verdict=verdict,
    )
