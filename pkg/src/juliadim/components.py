"""Connected components of iterated disc preimages on a pixel grid.

Level n marks the pixels whose centers survive n pullbacks of the escape
disc, i.e. |f^j(center)| < R for all j <= n.  Components are labeled by
flood fill with 4-connectivity in raster discovery order, which makes
label arrays reproducible byte for byte.  Containment between levels is
tested by pixel-set inclusion on the shared grid; closure claims use a
one-pixel morphological dilation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    NotYetPolyLike,
    ResolutionTooCoarse,
    SeedEscapes,
    ToolkitError,
    VBranchNotFound,
)
from .escape import Connectivity, DynSetup, classify, connectivity_class
from .grid import Box, write_pgm
from .polynomial import critical_points, preimage_roots

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def _label_raster_order(mask: np.ndarray):
    """4-connective labeling with labels in raster-scan discovery order."""
    raw, n = ndimage.label(mask, structure=_CROSS)
    if n == 0:
        return raw.astype(np.int32), 0
    flat = raw.ravel()
    nz = np.flatnonzero(flat)
    first = np.full(n + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat[nz], nz)
    order = np.argsort(first[1:], kind="stable")
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[1 + order] = np.arange(1, n + 1, dtype=np.int32)
    return remap[raw], n


@dataclass(frozen=True)
class LevelGrid:
    """Labeled pixel decomposition of the level-n disc preimage."""

    level: int
    box: Box
    width: int
    height: int
    labels: np.ndarray
    n_components: int

    def mask(self, label: int) -> np.ndarray:
        return self.labels == label

    def pixel_counts(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=self.n_components + 1)

    def component_records(self, setup: DynSetup):
        """Per-component rows: label, pixels, complex bbox, critical flags."""
        counts = self.pixel_counts()
        slices = ndimage.find_objects(self.labels)
        crits = critical_points(setup.p)
        rows, cols, inside = self.box.locate(
            np.array([c for c, _ in crits]), self.width, self.height
        )
        crit_labels = np.zeros(len(crits), dtype=np.int32)
        for i in range(len(crits)):
            if inside[i]:
                crit_labels[i] = self.labels[rows[i], cols[i]]
        px, py = self.box.pitches(self.width, self.height)
        out = []
        for lab in range(1, self.n_components + 1):
            sl = slices[lab - 1]
            if sl is None:
                continue
            re_lo = self.box.re_min + sl[1].start * px
            re_hi = self.box.re_min + sl[1].stop * px
            im_hi = self.box.im_max - sl[0].start * py
            im_lo = self.box.im_max - sl[0].stop * py
            flags = [bool(crit_labels[i] == lab) for i in range(len(crits))]
            out.append(
                {
                    "label": lab,
                    "pixels": int(counts[lab]),
                    "re_min": re_lo,
                    "re_max": re_hi,
                    "im_min": im_lo,
                    "im_max": im_hi,
                    "contains_critical": flags,
                }
            )
        return out

    def to_pgm(self, path, comments=()):
        clamped = np.clip(self.labels, 0, 255).astype(np.uint8)
        write_pgm(clamped, path, comments)

    def write_component_csv(self, path, setup: DynSetup, comments=()):
        recs = self.component_records(setup)
        with open(path, "w") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            fh.write(
                "label,pixels,re_min,re_max,im_min,im_max,contains_critical\n"
            )
            for r in recs:
                flags = ";".join(str(int(f)) for f in r["contains_critical"])
                fh.write(
                    f"{r['label']},{r['pixels']},{r['re_min']:.17g},"
                    f"{r['re_max']:.17g},{r['im_min']:.17g},{r['im_max']:.17g},"
                    f"{flags}\n"
                )


def level_masks(setup: DynSetup, n_max: int, box: Box, width: int, height: int):
    """Membership masks for levels 0..n_max in one forward sweep.

    Returns (masks, z_state, alive) so callers can continue the sweep.
    """
    z = box.centers(width, height)
    alive = np.abs(z) < setup.R
    z = np.where(alive, z, 0.0)
    masks = [alive.copy()]
    for _ in range(n_max):
        z[alive] = setup.p(z[alive])
        alive &= np.abs(z) < setup.R
        masks.append(alive.copy())
    return masks, z, alive


def level_grid(setup: DynSetup, n: int, box: Box, width: int, height: int) -> LevelGrid:
    """Label the level-n membership mask."""
    masks, _, _ = level_masks(setup, n, box, width, height)
    labels, count = _label_raster_order(masks[n])
    return LevelGrid(n, box, width, height, labels, count)


@dataclass
class ComponentChain:
    """Nested components of disc preimages around a bounded seed."""

    setup: DynSetup
    seed: complex
    box: Box
    width: int
    height: int
    ids: list
    grids: list
    full_masks: list
    nested: list
    closure_nested: list
    areas: list
    _z: np.ndarray = field(repr=False, default=None)
    _alive: np.ndarray = field(repr=False, default=None)

    @property
    def depth(self) -> int:
        return len(self.grids) - 1

    def mask(self, n: int) -> np.ndarray:
        return self.grids[n].labels == self.ids[n]

    def extend_to(self, n: int) -> None:
        """Continue the forward sweep and labeling to level n."""
        while self.depth < n:
            self._z[self._alive] = self.setup.p(self._z[self._alive])
            self._alive &= np.abs(self._z) < self.setup.R
            self.full_masks.append(self._alive.copy())
            grid, comp_id = self._attach_level(self._alive)
            self.grids.append(grid)
            self.ids.append(comp_id)

    def _attach_level(self, mask):
        labels, count = _label_raster_order(mask)
        grid = LevelGrid(
            len(self.grids), self.box, self.width, self.height, labels, count
        )
        rows, cols, inside = self.box.locate(
            np.array([self.seed]), self.width, self.height
        )
        if not inside[0]:
            raise ResolutionTooCoarse("seed lies outside the grid window")
        comp_id = int(labels[rows[0], cols[0]])
        if comp_id == 0:
            raise ResolutionTooCoarse(
                f"seed pixel left the level-{grid.level} mask; refine the grid"
            )
        new_mask = labels == comp_id
        prev_mask = self.mask(self.depth)
        self.nested.append(bool(not np.any(new_mask & ~prev_mask)))
        dilated = ndimage.binary_dilation(new_mask, structure=_CROSS)
        self.closure_nested.append(bool(not np.any(dilated & ~prev_mask)))
        self.areas.append(int(new_mask.sum()))
        return grid, comp_id


def component_chain(setup: DynSetup, seed: complex, n_max: int, box: Box,
                    width: int, height: int) -> ComponentChain:
    """Track the component of the seed through levels 0..n_max."""
    if classify(setup, seed).escaped:
        raise SeedEscapes(f"seed {seed} escapes; chain undefined")
    masks, z, alive = level_masks(setup, 0, box, width, height)
    labels, count = _label_raster_order(masks[0])
    grid0 = LevelGrid(0, box, width, height, labels, count)
    rows, cols, inside = box.locate(np.array([seed]), width, height)
    if not inside[0]:
        raise ResolutionTooCoarse("seed lies outside the grid window")
    id0 = int(labels[rows[0], cols[0]])
    if id0 == 0:
        raise ResolutionTooCoarse("seed pixel outside the level-0 disc")
    chain = ComponentChain(
        setup=setup,
        seed=seed,
        box=box,
        width=width,
        height=height,
        ids=[id0],
        grids=[grid0],
        full_masks=[masks[0]],
        nested=[],
        closure_nested=[],
        areas=[int((labels == id0).sum())],
        _z=z,
        _alive=alive,
    )
    chain.extend_to(n_max)
    return chain


@dataclass(frozen=True)
class PolyLikeRestriction:
    """The restriction of f to the level-(m+1) component over the level-m one."""

    m: int
    id_m: int
    id_m1: int
    degree: int
    crit_inside: tuple
    box: Box
    width: int
    height: int
    mask_m: np.ndarray
    mask_m1: np.ndarray
    side_candidates: tuple
    ambient_disconnected: bool


def _component_pixels(grid: LevelGrid, slices, lab: int):
    """Pixel centers of one labeled component, via its bounding slice."""
    sl = slices[lab - 1]
    sub = grid.labels[sl] == lab
    px, py = grid.box.pitches(grid.width, grid.height)
    cols = sl[1].start + np.nonzero(sub)[1]
    rows = sl[0].start + np.nonzero(sub)[0]
    xs = grid.box.re_min + (cols + 0.5) * px
    ys = grid.box.im_max - (rows + 0.5) * py
    return xs + 1j * ys


def _image_component(setup, pts, grid_to):
    """Majority label at the coarser level of the forward image of pts."""
    img = setup.p(pts)
    rows, cols, inside = grid_to.box.locate(img, grid_to.width, grid_to.height)
    if not inside.any():
        return 0
    labs = grid_to.labels[rows[inside], cols[inside]]
    return int(np.argmax(np.bincount(labs)))


def detect_poly_like(setup: DynSetup, chain: ComponentChain, m: int) -> PolyLikeRestriction:
    """Certify at grid scale that f maps level m+1 over level m properly.

    Succeeds when no level-(m+1) component besides the chain's own maps
    into the level-m component while intersecting it.  Other components
    fully inside that map elsewhere are legitimate; their labels are
    reported for the side-branch search.  Degree is one plus the number
    of captured critical points, counted with multiplicity.
    """
    if m + 1 > chain.depth:
        chain.extend_to(m + 1)
    grid_m = chain.grids[m]
    grid_m1 = chain.grids[m + 1]
    mask_m = chain.mask(m)
    mask_m1 = chain.mask(m + 1)

    rows_idx, cols_idx = np.nonzero(mask_m)
    h, w = mask_m.shape
    if (
        rows_idx.min() == 0 or rows_idx.max() == h - 1
        or cols_idx.min() == 0 or cols_idx.max() == w - 1
    ):
        raise NotYetPolyLike(m, "level-m component touches the grid frame")

    if np.any(mask_m1 & ~mask_m):
        raise NotYetPolyLike(m, "chain component not nested at grid scale")

    totals = grid_m1.pixel_counts()
    overlap = np.bincount(
        grid_m1.labels[mask_m], minlength=grid_m1.n_components + 1
    )
    slices = ndimage.find_objects(grid_m1.labels)
    side = []
    for lab in range(1, grid_m1.n_components + 1):
        if lab == chain.ids[m + 1] or overlap[lab] == 0:
            continue
        if overlap[lab] < totals[lab]:
            raise NotYetPolyLike(
                m, f"component {lab} straddles the level-m boundary"
            )
        pts = _component_pixels(grid_m1, slices, lab)
        if _image_component(setup, pts, grid_m) == chain.ids[m]:
            raise NotYetPolyLike(
                m, f"second inverse branch {lab} maps into the level-m component"
            )
        side.append(lab)

    crits = critical_points(setup.p)
    pts = np.array([c for c, _ in crits])
    rows, cols, inside = chain.box.locate(pts, chain.width, chain.height)
    captured = []
    count = 0
    for i, (c, mult) in enumerate(crits):
        if inside[i] and mask_m1[rows[i], cols[i]]:
            captured.append((c, mult))
            count += mult
    degree = count + 1
    if degree < 2:
        raise NotYetPolyLike(m, "no critical point captured; degree would be 1")

    ambient = connectivity_class(setup).kind is Connectivity.DISCONNECTED
    if ambient and degree >= setup.p.degree:
        raise ToolkitError(
            "restriction degree must drop below deg(f) for a disconnected "
            f"Julia set, got {degree}"
        )
    return PolyLikeRestriction(
        m=m,
        id_m=chain.ids[m],
        id_m1=chain.ids[m + 1],
        degree=degree,
        crit_inside=tuple(captured),
        box=chain.box,
        width=chain.width,
        height=chain.height,
        mask_m=mask_m,
        mask_m1=mask_m1,
        side_candidates=tuple(side),
        ambient_disconnected=ambient,
    )


def first_poly_like(setup: DynSetup, chain: ComponentChain, m_start: int = 1,
                    m_cap: int = 12) -> PolyLikeRestriction:
    """Probe m = m_start, ..., m_cap and return the first certified level."""
    last = None
    for m in range(m_start, m_cap + 1):
        try:
            return detect_poly_like(setup, chain, m)
        except NotYetPolyLike as exc:
            last = exc
    raise NotYetPolyLike(m_cap, f"no certified level up to cap ({last})")


@dataclass(frozen=True)
class VBranch:
    """A disc-preimage component wedged between levels m and m+1."""

    n1: int
    label: int
    mask: np.ndarray
    pixels: int
    bbox: tuple


def _preimage_any_hits(setup, targets, depth, hit_mask, box, width, height,
                       guide_masks=None, chunk=65536):
    """For each target, does some depth-step preimage land in hit_mask?"""
    ok = np.zeros(targets.size, dtype=bool)
    for lo in range(0, targets.size, chunk):
        pts = targets[lo : lo + chunk]
        src = np.arange(pts.size)
        cur = pts
        for j in range(1, depth + 1):
            roots_arr = preimage_roots(setup.p, cur)
            d = roots_arr.shape[-1]
            cur = roots_arr.reshape(-1)
            src = np.repeat(src, d)
            if guide_masks is not None and j < depth:
                rows, cols, inside = box.locate(cur, width, height)
                keep = inside.copy()
                keep[inside] = guide_masks[j][rows[inside], cols[inside]]
                cur = cur[keep]
                src = src[keep]
        rows, cols, inside = box.locate(cur, width, height)
        hit = inside.copy()
        hit[inside] = hit_mask[rows[inside], cols[inside]]
        hits = np.zeros(pts.size, dtype=bool)
        hits[src[hit]] = True
        ok[lo : lo + chunk] = hits
    return ok


def find_V_branch(setup: DynSetup, chain: ComponentChain, m: int,
                  max_extra_levels: int = 4) -> VBranch:
    """Locate a component inside level m, disjoint from level m+1.

    Scans levels n1 = m+1, m+2, ... for grid components whose pixels all
    sit in the level-m component and none in the level-(m+1) one, then
    certifies that every level-m pixel center has an n1-step preimage
    root landing in the component (with a one-pixel dilation tolerance).
    Among candidates at one level the largest is tried first.
    """
    mask_m = chain.mask(m)
    mask_m1 = chain.mask(m + 1)
    centers = chain.box.centers(chain.width, chain.height)
    targets = centers[mask_m]
    for n1 in range(m + 1, m + 1 + max_extra_levels):
        if n1 > chain.depth:
            chain.extend_to(n1)
        grid = chain.grids[n1]
        totals = grid.pixel_counts()
        in_m = np.bincount(grid.labels[mask_m], minlength=grid.n_components + 1)
        in_m1 = np.bincount(grid.labels[mask_m1], minlength=grid.n_components + 1)
        candidates = [
            (int(totals[lab]), lab)
            for lab in range(1, grid.n_components + 1)
            if lab != chain.ids[n1]
            and totals[lab] > 0
            and in_m[lab] == totals[lab]
            and in_m1[lab] == 0
        ]
        if not candidates:
            continue
        candidates.sort(key=lambda t: (-t[0], t[1]))
        for cnt, lab in candidates:
            comp = grid.labels == lab
            hit_mask = ndimage.binary_dilation(comp, structure=_CROSS)
            # no intermediate pruning: branches into small side components
            # pass through arcs thinner than a pixel, which level masks
            # cannot certify
            hits = _preimage_any_hits(
                setup, targets, n1, hit_mask, chain.box, chain.width,
                chain.height, guide_masks=None,
            )
            if hits.all():
                rows_idx, cols_idx = np.nonzero(comp)
                px, py = chain.box.pitches(chain.width, chain.height)
                bbox = (
                    chain.box.re_min + cols_idx.min() * px,
                    chain.box.re_min + (cols_idx.max() + 1) * px,
                    chain.box.im_max - (rows_idx.max() + 1) * py,
                    chain.box.im_max - rows_idx.min() * py,
                )
                return VBranch(n1, lab, comp, cnt, bbox)
    raise VBranchNotFound(
        f"no side component up to level {m + max_extra_levels} certifies"
    )
