import itertools
import math

import numpy as np
import pytest

from d2dsim.clustering import (TWO_PI, ClusterSet, kmeans_angular,
                               kmeans_angular_arrays, reference_angle)
from d2dsim.scenario import ConfigError, SensorNode


def _node(i, angle, alive=True):
    n = SensorNode(id=i, distance_m=100.0, angle_rad=angle, battery_j=1.0)
    n.alive = alive
    return n


def _circdev(a, b):
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def _circmean(angles):
    return math.atan2(sum(math.sin(a) for a in angles),
                      sum(math.cos(a) for a in angles)) % TWO_PI


def _partition_cost(angles, partition):
    """Total squared circular deviation from each cluster's circular mean."""
    cost = 0.0
    for members in partition:
        mean = _circmean([angles[m] for m in members])
        cost += sum(_circdev(angles[m], mean) ** 2 for m in members)
    return cost


def _all_partitions(items, k):
    """Every way to split `items` into exactly k nonempty unlabeled groups."""
    if len(items) < k:
        return
    if k == 1:
        yield [list(items)]
        return
    first, rest = items[0], items[1:]
    for smaller in _all_partitions(rest, k - 1):
        yield [[first]] + smaller
    for smaller in _all_partitions(rest, k):
        for i in range(len(smaller)):
            yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1:]


def test_eight_sensors_brute_force_optimal():
    """With 8 sensors at multiples of 45 degrees and K=4, the produced
    partition must be one of the brute-force optima (adjacent pairs)."""
    angles = [k * math.pi / 4 for k in range(8)]
    assign, _ = kmeans_angular_arrays(np.array(angles), 4)
    got = frozenset(frozenset(np.flatnonzero(assign == c)) for c in range(4))

    best = min(_partition_cost(angles, p)
               for p in _all_partitions(list(range(8)), 4))
    optima = {frozenset(frozenset(g) for g in p)
              for p in _all_partitions(list(range(8)), 4)
              if _partition_cost(angles, p) == pytest.approx(best)}
    assert got in optima
    # The optima are exactly the cyclic adjacent-pair partitions.
    assert got == frozenset({frozenset({0, 7}), frozenset({1, 2}),
                             frozenset({3, 4}), frozenset({5, 6})})


def test_k_equals_one():
    angles = np.array([0.1, 0.2, 3.0, 5.0])
    assign, cent = kmeans_angular_arrays(angles, 1)
    assert np.all(assign == 0)
    assert len(cent) == 1


def test_k_equals_n():
    angles = np.linspace(0, 6, 7)
    assign, cent = kmeans_angular_arrays(angles, 7)
    assert sorted(assign) == list(range(7))
    assert sorted(cent) == list(range(7))


def test_determinism():
    rng = np.random.default_rng(3)
    angles = rng.uniform(0, TWO_PI, 400)
    a1, c1 = kmeans_angular_arrays(angles, 10)
    a2, c2 = kmeans_angular_arrays(angles, 10)
    assert np.array_equal(a1, a2)
    assert np.array_equal(c1, c2)


def test_angular_locality():
    """Cluster mates should be angularly close: the mean within-cluster
    spread must beat random assignment by a wide margin."""
    rng = np.random.default_rng(11)
    angles = rng.uniform(0, TWO_PI, 2000)
    assign, _ = kmeans_angular_arrays(angles, 20)
    within = []
    for c in range(20):
        members = angles[assign == c]
        assert len(members) > 0
        mean = _circmean(list(members))
        within.extend(_circdev(a, mean) for a in members)
    # Random partition of a full circle has mean deviation ~pi/2.
    assert np.mean(within) < 0.35


def test_clusters_nearly_arcs():
    """Sorted by angle, clusters should be close to contiguous arcs.  The
    single-pass procedure is order-dependent, so a modest number of extra
    boundaries beyond the ideal one-per-cluster is tolerated; a random
    labeling would produce ~440 boundaries here."""
    rng = np.random.default_rng(5)
    angles = rng.uniform(0, TWO_PI, 500)
    assign, _ = kmeans_angular_arrays(angles, 8)
    order = np.argsort(angles)
    labels = assign[order]
    changes = int(np.sum(labels != np.roll(labels, 1)))
    assert 8 <= changes <= 40


def test_centroid_is_member():
    rng = np.random.default_rng(9)
    angles = rng.uniform(0, TWO_PI, 300)
    assign, cent = kmeans_angular_arrays(angles, 12)
    for c, idx in enumerate(cent):
        assert assign[idx] == c


def test_invalid_k():
    with pytest.raises(ConfigError):
        kmeans_angular_arrays(np.array([0.0, 1.0]), 0)
    with pytest.raises(ConfigError):
        kmeans_angular_arrays(np.array([0.0, 1.0]), 3)


def test_node_interface_skips_dead():
    nodes = [_node(i, i * 0.5) for i in range(10)]
    nodes[3].alive = False
    cs = kmeans_angular(nodes, 3)
    assert isinstance(cs, ClusterSet)
    assert 3 not in cs.assignments
    assert set(cs.assignments) == {0, 1, 2, 4, 5, 6, 7, 8, 9}
    assert set(cs.assignments.values()) == {0, 1, 2}
    assert all(c in cs.assignments for c in cs.centroids)


def test_reference_angle_normalized():
    assert reference_angle(_node(0, -math.pi / 2)) == pytest.approx(
        3 * math.pi / 2)
    assert reference_angle(_node(0, TWO_PI + 0.25)) == pytest.approx(0.25)
