"""Binary BVH over axis-aligned item bounds, split by binned SAH."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 4
N_BUCKETS = 16
MAX_DEPTH = 64


@dataclass(frozen=True, eq=False)
class BVH:
    node_lo: np.ndarray
    node_hi: np.ndarray
    node_left: np.ndarray
    node_right: np.ndarray
    node_start: np.ndarray
    node_count: np.ndarray
    order: np.ndarray

    @property
    def n_nodes(self):
        return len(self.node_count)

    @property
    def n_leaves(self):
        return int(np.count_nonzero(self.node_count))

    def depth(self):
        best = 0
        stack = [(0, 1)]
        while stack:
            node, dep = stack.pop()
            best = max(best, dep)
            if self.node_count[node] == 0:
                stack.append((self.node_left[node], dep + 1))
                stack.append((self.node_right[node], dep + 1))
        return best


def _area(lo, hi):
    e = np.maximum(hi - lo, 0.0)
    return 2.0 * (e[..., 0] * e[..., 1] + e[..., 1] * e[..., 2] + e[..., 2] * e[..., 0])


def _sah_split(lo, hi, cent):
    """Return (axis, boolean left-mask) of the cheapest bucket split, or None."""
    n = len(cent)
    c_lo = cent.min(axis=0)
    c_hi = cent.max(axis=0)
    best = (np.inf, None, None)
    for axis in range(3):
        extent = c_hi[axis] - c_lo[axis]
        if extent <= 0.0:
            continue
        b = ((cent[:, axis] - c_lo[axis]) * (N_BUCKETS / extent)).astype(np.int64)
        np.clip(b, 0, N_BUCKETS - 1, out=b)
        counts = np.bincount(b, minlength=N_BUCKETS)
        blo = np.full((N_BUCKETS, 3), np.inf)
        bhi = np.full((N_BUCKETS, 3), -np.inf)
        np.minimum.at(blo, b, lo)
        np.maximum.at(bhi, b, hi)
        # prefix and suffix unions of bucket boxes
        plo = np.minimum.accumulate(blo, axis=0)
        phi = np.maximum.accumulate(bhi, axis=0)
        slo = np.minimum.accumulate(blo[::-1], axis=0)[::-1]
        shi = np.maximum.accumulate(bhi[::-1], axis=0)[::-1]
        nl = np.cumsum(counts)[:-1]
        nr = n - nl
        cost = _area(plo[:-1], phi[:-1]) * nl + _area(slo[1:], shi[1:]) * nr
        cost = np.where((nl > 0) & (nr > 0), cost, np.inf)
        k = int(np.argmin(cost))
        if cost[k] < best[0]:
            best = (cost[k], axis, b <= k)
    if best[1] is None:
        return None
    return best[1], best[2]


def build_bvh_arrays(item_lo, item_hi, leaf_size=LEAF_SIZE):
    """Build a BVH over items with bounds `item_lo`, `item_hi` of shape (n, 3)."""
    item_lo = np.asarray(item_lo, dtype=float)
    item_hi = np.asarray(item_hi, dtype=float)
    n = len(item_lo)
    if n == 0:
        raise ValueError("cannot build a BVH over zero items")
    # pad so floating-point slab tests never clip a flat or tight primitive
    pad = 1e-9 * (1.0 + np.max(item_hi.max(axis=0) - item_lo.min(axis=0)))
    item_lo = item_lo - pad
    item_hi = item_hi + pad
    cent = 0.5 * (item_lo + item_hi)

    los, his, lefts, rights, starts, counts = [], [], [], [], [], []
    order = []

    def new_node(idx):
        los.append(item_lo[idx].min(axis=0))
        his.append(item_hi[idx].max(axis=0))
        lefts.append(-1)
        rights.append(-1)
        starts.append(0)
        counts.append(0)
        return len(los) - 1

    root = new_node(np.arange(n))
    work = [(root, np.arange(n), 0)]
    while work:
        node, idx, depth = work.pop()
        if len(idx) <= leaf_size:
            starts[node] = len(order)
            counts[node] = len(idx)
            order.extend(idx.tolist())
            continue
        split = _sah_split(item_lo[idx], item_hi[idx], cent[idx]) if depth < MAX_DEPTH else None
        if split is None:
            mask = np.zeros(len(idx), dtype=bool)
            mask[: len(idx) // 2] = True
        else:
            mask = split[1]
        li, ri = idx[mask], idx[~mask]
        left = new_node(li)
        right = new_node(ri)
        lefts[node] = left
        rights[node] = right
        work.append((right, ri, depth + 1))
        work.append((left, li, depth + 1))

    return BVH(
        node_lo=np.array(los),
        node_hi=np.array(his),
        node_left=np.array(lefts, dtype=np.int64),
        node_right=np.array(rights, dtype=np.int64),
        node_start=np.array(starts, dtype=np.int64),
        node_count=np.array(counts, dtype=np.int64),
        order=np.array(order, dtype=np.int64),
    )
