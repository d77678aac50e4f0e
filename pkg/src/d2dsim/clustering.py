"""Angular K-means partitioning of sensors as seen from the BS.

The procedure is the literal single-pass variant: centroids are initialized
by farthest-angle traversal, then every remaining sensor is folded in one at
a time (ascending id), refreshing the receiving cluster's centroid after each
assignment.  It is order-dependent by construction; permutation robustness is
not claimed.  Optional classical refinement passes are available but off by
default.

The inner pass is inherently sequential, so it is compiled with numba to keep
full-scale re-clustering affordable inside the day loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .scenario import ConfigError, SensorNode

TWO_PI = 2.0 * math.pi


@dataclass
class ClusterSet:
    assignments: dict[int, int]       # sensor id -> cluster id
    centroids: list[int]              # one member sensor id per cluster


def reference_angle(node: SensorNode) -> float:
    """Azimuth of the sensor as seen from the BS, normalized to [0, 2*pi)."""
    return node.angle_rad % TWO_PI


@njit(cache=True)
def _circdist(a, b):
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


@njit(cache=True)
def _kmeans_pass(angles, k):
    """Sequential clustering pass over angles (ascending-id order).

    Returns (assignment, centroid_index) where centroid_index holds, per
    cluster, the index (into `angles`) of its centroid member.
    """
    n = angles.shape[0]
    assign = np.full(n, -1, dtype=np.int32)

    # Farthest-angle initialization: the sensor closest to angle 0 first,
    # then greedily the sensor maximizing the minimum circular distance to
    # the centroids chosen so far.  Ties break to the lowest index.
    centroid_idx = np.empty(k, dtype=np.int64)
    mindist = np.empty(n, dtype=np.float64)
    best = 0
    bestd = _circdist(angles[0], 0.0)
    for j in range(1, n):
        d = _circdist(angles[j], 0.0)
        if d < bestd:
            bestd = d
            best = j
    centroid_idx[0] = best
    for j in range(n):
        mindist[j] = _circdist(angles[j], angles[best])
    for c in range(1, k):
        best = 0
        bestd = -1.0
        for j in range(n):
            if assign[j] < 0 and mindist[j] > bestd:
                ok = True
                for cc in range(c):
                    if centroid_idx[cc] == j:
                        ok = False
                        break
                if ok:
                    bestd = mindist[j]
                    best = j
        centroid_idx[c] = best
        for j in range(n):
            d = _circdist(angles[j], angles[best])
            if d < mindist[j]:
                mindist[j] = d

    centroid_angle = np.empty(k, dtype=np.float64)
    sx = np.zeros(k, dtype=np.float64)
    sy = np.zeros(k, dtype=np.float64)
    head = np.full(k, -1, dtype=np.int64)
    tail = np.full(k, -1, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)
    for c in range(k):
        j = centroid_idx[c]
        assign[j] = c
        centroid_angle[c] = angles[j]
        sx[c] = math.cos(angles[j])
        sy[c] = math.sin(angles[j])
        head[c] = j
        tail[c] = j

    # Incremental assignment with centroid refresh after every sensor.
    for j in range(n):
        if assign[j] >= 0:
            continue
        c = 0
        bestd = _circdist(angles[j], centroid_angle[0])
        for cc in range(1, k):
            d = _circdist(angles[j], centroid_angle[cc])
            # Equidistant centroids: take the one at the larger angle.
            if d < bestd or (d == bestd
                             and centroid_angle[cc] > centroid_angle[c]):
                bestd = d
                c = cc
        assign[j] = c
        nxt[tail[c]] = j
        tail[c] = j
        sx[c] += math.cos(angles[j])
        sy[c] += math.sin(angles[j])
        mean = math.atan2(sy[c], sx[c]) % TWO_PI
        m = head[c]
        bm = m
        bd = _circdist(angles[m], mean)
        while nxt[m] >= 0:
            m = nxt[m]
            d = _circdist(angles[m], mean)
            # Equally near members: lowest sensor index wins.
            if d < bd or (d == bd and m < bm):
                bd = d
                bm = m
        centroid_idx[c] = bm
        centroid_angle[c] = angles[bm]
    return assign, centroid_idx


@njit(cache=True)
def _refine_pass(angles, assign, centroid_angle, k):
    """One classical refinement pass: full reassignment, then new centroids."""
    n = angles.shape[0]
    for j in range(n):
        c = 0
        bestd = _circdist(angles[j], centroid_angle[0])
        for cc in range(1, k):
            d = _circdist(angles[j], centroid_angle[cc])
            if d < bestd or (d == bestd
                             and centroid_angle[cc] > centroid_angle[c]):
                bestd = d
                c = cc
        assign[j] = c
    sx = np.zeros(k, dtype=np.float64)
    sy = np.zeros(k, dtype=np.float64)
    for j in range(n):
        sx[assign[j]] += math.cos(angles[j])
        sy[assign[j]] += math.sin(angles[j])
    centroid_idx = np.full(k, -1, dtype=np.int64)
    bd = np.full(k, 1e18, dtype=np.float64)
    for j in range(n):
        c = assign[j]
        mean = math.atan2(sy[c], sx[c]) % TWO_PI
        d = _circdist(angles[j], mean)
        if d < bd[c]:
            bd[c] = d
            centroid_idx[c] = j
    for c in range(k):
        if centroid_idx[c] >= 0:
            centroid_angle[c] = angles[centroid_idx[c]]
    return assign, centroid_idx


def kmeans_angular_arrays(angles: np.ndarray, k: int,
                          refine_passes: int = 0):
    """Array form of the clustering; `angles` must be in ascending-id order.

    Returns (assignment, centroid_index) as numpy arrays indexed like angles.
    """
    n = len(angles)
    if k < 1:
        raise ConfigError(f"cluster count must be >= 1, got {k}")
    if k > n:
        raise ConfigError(f"cluster count {k} exceeds node count {n}")
    angles = np.asarray(angles, dtype=np.float64) % TWO_PI
    assign, centroid_idx = _kmeans_pass(angles, k)
    centroid_angle = angles[centroid_idx].copy()
    for _ in range(refine_passes):
        assign, centroid_idx = _refine_pass(angles, assign, centroid_angle, k)
    return np.asarray(assign), np.asarray(centroid_idx)


def kmeans_angular(nodes: list[SensorNode], k: int, seed: int = 0,
                   refine_passes: int = 0) -> ClusterSet:
    """Cluster alive sensors by reference angle.

    The procedure itself is deterministic given the fixed ascending-id
    visiting order; `seed` is accepted for interface stability but unused.
    """
    del seed
    alive = [node for node in nodes if node.alive]
    if k > len(alive):
        raise ConfigError(f"cluster count {k} exceeds alive node count {len(alive)}")
    alive.sort(key=lambda node: node.id)
    angles = np.array([reference_angle(node) for node in alive])
    assign, centroid_idx = kmeans_angular_arrays(angles, k, refine_passes)
    assignments = {node.id: int(c) for node, c in zip(alive, assign)}
    centroids = [alive[int(i)].id for i in centroid_idx]
    return ClusterSet(assignments=assignments, centroids=centroids)
