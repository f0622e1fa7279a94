"""Patch anchor grid, nonlocal block matching and weighted aggregation.

Groups are stacks of the L patches most similar (SSD over all three
channels) to a reference patch, searched in a window centered at the
reference anchor. Aggregation scatter-adds group tensors back into the
image and divides by per-pixel coverage counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .backend import kernels


class PatchAnchor(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class GroupIndex:
    """Member anchors of one group: members[0] is the reference."""
    members: np.ndarray  # (L, 2) int64 of (row, col)
    g: int = 0
    degenerate: bool = False  # candidate pool smaller than L, members cycled

    @property
    def reference(self) -> PatchAnchor:
        return PatchAnchor(int(self.members[0, 0]), int(self.members[0, 1]))


def anchor_grid(h: int, w: int, p: int, stride: int) -> list[PatchAnchor]:
    """Stride grid of patch top-left corners, with the last row/column
    clamped to h-p / w-p so every pixel is covered."""
    if p > h or p > w:
        raise ValueError(f"patch size {p} exceeds image dims ({h}, {w})")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    rows = sorted(set(range(0, h - p + 1, stride)) | {h - p})
    cols = sorted(set(range(0, w - p + 1, stride)) | {w - p})
    return [PatchAnchor(r, c) for r in rows for c in cols]


def _match_one(img: np.ndarray, ar: int, ac: int, p: int, window: int,
               L: int) -> tuple[np.ndarray, bool]:
    h, w = img.shape[:2]
    half = window // 2
    r0, r1 = max(0, ar - half), min(h - p, ar + half) + 1
    c0, c1 = max(0, ac - half), min(w - p, ac + half) + 1
    d = kernels.ssd_window(img, ar, ac, r0, r1, c0, c1, p).ravel()
    nr, nc = r1 - r0, c1 - c0
    # Stable sort keeps row-major candidate order on ties.
    order = np.argsort(d, kind="stable")
    ref_flat = (ar - r0) * nc + (ac - c0)
    ordered = order[order != ref_flat]
    pool = nr * nc
    take = min(L - 1, pool - 1)
    sel = np.empty(min(L, pool), dtype=np.int64)
    sel[0] = ref_flat
    sel[1:] = ordered[:take]
    members = np.empty((L, 2), dtype=np.int64)
    degenerate = pool < L
    idx = sel[np.arange(L) % sel.size] if degenerate else sel
    members[:, 0] = r0 + idx // nc
    members[:, 1] = c0 + idx % nc
    return members, degenerate


def block_match(ref_image: np.ndarray, anchor: PatchAnchor, window: int,
                L: int, p: int, g: int = 0) -> GroupIndex:
    """Find the L nearest patches to ``anchor`` inside the search window.

    The reference occupies slot 0; remaining slots are ordered by ascending
    SSD with ties broken in row-major candidate order. If the window holds
    fewer than L candidates the ordered pool is repeated cyclically and the
    group is flagged degenerate.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if L < 1:
        raise ValueError("group size must be >= 1")
    img = np.ascontiguousarray(ref_image, dtype=np.float64)
    members, degenerate = _match_one(img, anchor.row, anchor.col, p, window, L)
    return GroupIndex(members=members, g=g, degenerate=degenerate)


def match_all(ref_image: np.ndarray, anchors: list[PatchAnchor], window: int,
              L: int, p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Block-match every anchor; returns (rows, cols, degenerate) arrays of
    shapes (G, L), (G, L), (G,)."""
    img = np.ascontiguousarray(ref_image, dtype=np.float64)
    ng = len(anchors)
    rows = np.empty((ng, L), dtype=np.int64)
    cols = np.empty((ng, L), dtype=np.int64)
    degenerate = np.zeros(ng, dtype=bool)
    for g, a in enumerate(anchors):
        members, deg = _match_one(img, a.row, a.col, p, window, L)
        rows[g] = members[:, 0]
        cols[g] = members[:, 1]
        degenerate[g] = deg
    return rows, cols, degenerate


def extract_group(x: np.ndarray, idx: GroupIndex, p: int) -> np.ndarray:
    """Stack the member patches of one group as a (p, p, 3, L) tensor."""
    h, w = x.shape[:2]
    if (idx.members[:, 0].min() < 0 or idx.members[:, 0].max() > h - p
            or idx.members[:, 1].min() < 0 or idx.members[:, 1].max() > w - p):
        raise ValueError("group anchor out of range")
    img = np.ascontiguousarray(x, dtype=np.float64)
    rows = np.ascontiguousarray(idx.members[None, :, 0])
    cols = np.ascontiguousarray(idx.members[None, :, 1])
    return kernels.gather_groups(img, rows, cols, p)[0]


def aggregate(groups: list[tuple[GroupIndex, np.ndarray]], h: int, w: int,
              fallback: np.ndarray) -> np.ndarray:
    """Scatter-add group tensors, divide by coverage counts; uncovered
    pixels take the fallback value."""
    num = np.zeros((h, w, 3), dtype=np.float64)
    den = np.zeros((h, w, 3), dtype=np.float64)
    for idx, tens in groups:
        p = tens.shape[0]
        if tens.shape != (p, p, 3, idx.members.shape[0]):
            raise ValueError(f"group tensor shape {tens.shape} does not "
                             "match its index")
        rows = np.ascontiguousarray(idx.members[None, :, 0])
        cols = np.ascontiguousarray(idx.members[None, :, 1])
        kernels.scatter_groups(num, den, rows, cols,
                               np.ascontiguousarray(tens[None], dtype=np.float64))
    covered = den > 0
    out = np.where(covered, num / np.where(covered, den, 1.0), fallback)
    return out
