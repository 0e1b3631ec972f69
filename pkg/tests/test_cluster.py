import random

import pytest

from conftest import CAPACITY_SETS, neighbourhood_points, random_clients, two_groups
from kmroute.cluster import Client, FleetExhausted, UnassignableClient, kmeans, recursive_kmeans
from kmroute.fleet import FleetPlan, FleetSpec, plan_fleet
from kmroute.geo import EuclideanMetric, GeoPoint, PlanarPoint, centroid
from kmroute.oracle import best_bipartition


def wide_points(seed):
    rng = random.Random(seed)
    n = rng.randint(3, 25)
    return [(i + 1, GeoPoint(rng.uniform(-70, 70), rng.uniform(-80, 80))) for i in range(n)], rng.randint(2, 3)


class TestKMeans:
    def test_k1_is_the_mean(self):
        pts = neighbourhood_points(0)
        res = kmeans(pts, 1, rng_seed=3)
        assert set(res.assignments.values()) == {0}
        assert res.centroids[0] == centroid([p for _, p in pts])
        assert res.iterations == 1

    def test_two_far_groups_match_oracle(self):
        pts = two_groups()
        res = kmeans(pts, 2, rng_seed=11)
        (a, b), j_best = best_bipartition(pts)
        found = sorted([sorted(res.members(0)), sorted(res.members(1))])
        assert found == sorted([sorted(a), sorted(b)]) == [[1, 2, 3, 4, 5], [6, 7, 8, 9, 10]]
        assert res.objective_j == pytest.approx(j_best, rel=1e-12)

    def test_k_equals_n(self):
        pts = neighbourhood_points(4, n=6)
        res = kmeans(pts, 6, rng_seed=0)
        assert sorted(res.assignments.values()) == list(range(6))
        assert res.objective_j == 0.0

    @pytest.mark.parametrize("k", [0, -1, 11])
    def test_bad_k(self, k):
        with pytest.raises(ValueError):
            kmeans(neighbourhood_points(0), k)

    def test_no_points(self):
        with pytest.raises(ValueError):
            kmeans([], 1)

    def test_deterministic_per_seed(self):
        pts = neighbourhood_points(9, n=12)
        a = kmeans(pts, 2, rng_seed=5)
        b = kmeans(pts, 2, rng_seed=5)
        assert a.assignments == b.assignments
        assert a.centroids == b.centroids
        assert a.history == b.history

    @pytest.mark.parametrize("seed", range(40))
    def test_history_non_increasing(self, seed):
        pts = neighbourhood_points(seed, n=15)
        res = kmeans(pts, 2, rng_seed=seed)
        for before, after in zip(res.history, res.history[1:]):
            assert after <= before * (1 + 1e-9)
        assert res.objective_j == res.history[-1]

    @pytest.mark.parametrize("seed", [755, 967, 1545, 1560])
    def test_guard_keeps_history_monotone_at_continental_scale(self, seed):
        # on these inputs a coordinate-mean update raises the great-circle objective
        pts, k = wide_points(seed)
        res = kmeans(pts, k, rng_seed=seed)
        assert res.iterations > len(res.history)
        assert all(b <= a for a, b in zip(res.history, res.history[1:]))

    @pytest.mark.parametrize("seed", range(30))
    def test_final_centroids_are_member_means(self, seed):
        pts = neighbourhood_points(seed, n=10)
        res = kmeans(pts, 2, rng_seed=seed)
        lookup = dict(pts)
        for j, c in enumerate(res.centroids):
            assert c == centroid([lookup[i] for i in res.members(j)])

    @pytest.mark.parametrize("seed", range(20))
    def test_objective_not_below_exhaustive_minimum(self, seed):
        pts = neighbourhood_points(seed)
        res = kmeans(pts, 2, rng_seed=seed)
        _, j_best = best_bipartition(pts)
        assert res.objective_j >= j_best * (1 - 1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_point_visits_per_pass(self, seed):
        # each assignment pass measures every point against both centroids
        pts = neighbourhood_points(seed, n=14)
        res = kmeans(pts, 2, rng_seed=seed)
        assert res.reseeds == 0
        assert res.distance_evaluations == res.assignment_passes * len(pts) * 2

    def test_duplicate_points_reseed(self):
        pts = [(1, GeoPoint(1, 1)), (2, GeoPoint(1, 1)), (3, GeoPoint(1, 1)), (4, GeoPoint(2, 2))]
        res = kmeans(pts, 2, rng_seed=0)
        assert sorted(len(res.members(j)) for j in range(2)) == [1, 3]

    def test_planar_metric(self):
        pts = [(1, PlanarPoint(0, 0)), (2, PlanarPoint(0, 1)), (3, PlanarPoint(10, 0)), (4, PlanarPoint(10, 1))]
        res = kmeans(pts, 2, rng_seed=1, metric=EuclideanMetric())
        assert sorted(sorted(res.members(j)) for j in range(2)) == [[1, 2], [3, 4]]
        assert res.objective_j == pytest.approx(1.0)


def check_tree(root, clients, plan, spec):
    """Partition, capacity and vehicle-use invariants of a phase tree."""
    demand = {c.id: c.demand for c in clients}
    assert sorted(root.members) == sorted(demand)

    def walk(node):
        if node.is_leaf:
            assert node.vehicle is not None
            assert node.demand == sum(demand[m] for m in node.members) <= node.vehicle.capacity
            return
        assert sorted(node.members) == sorted(node.left.members + node.right.members)
        assert not set(node.left.members) & set(node.right.members)
        walk(node.left)
        walk(node.right)

    walk(root)
    leaves = root.leaves()
    vehicles = [(l.vehicle.type_id, l.vehicle.index) for l in leaves]
    assert len(vehicles) == len(set(vehicles))
    planned = dict(plan.counts)
    for type_id, _ in vehicles:
        assert sum(1 for t, _ in vehicles if t == type_id) <= planned[type_id]
    seen = [m for l in leaves for m in l.members]
    assert sorted(seen) == sorted(demand)


def clients_from(points, demand=1):
    return [Client(i, p, demand) for i, p in points]


class TestRecursiveKMeans:
    def test_root_fits_single_vehicle(self, unit_spec4):
        clients = clients_from(neighbourhood_points(0, n=4))
        plan = plan_fleet(4, unit_spec4)
        root = recursive_kmeans(clients, plan, unit_spec4)
        assert root.is_leaf
        assert sorted(root.members) == [1, 2, 3, 4]
        assert root.vehicle.capacity == 4

    def test_two_groups_split_at_root(self, unit_spec4):
        pts = two_groups(per_group=4)
        clients = clients_from(pts)
        plan = plan_fleet(8, unit_spec4)
        root = recursive_kmeans(clients, plan, unit_spec4, rng_seed=2)
        (a, b), _ = best_bipartition(pts)
        assert root.left.is_leaf and root.right.is_leaf
        assert sorted([sorted(root.left.members), sorted(root.right.members)]) == sorted([sorted(a), sorted(b)])
        check_tree(root, clients, plan, unit_spec4)

    def test_five_clients_two_vehicles(self, unit_spec4):
        clients = clients_from(neighbourhood_points(1, n=5))
        plan = plan_fleet(5, unit_spec4)
        assert plan.count_vector() == (2,)
        root = recursive_kmeans(clients, plan, unit_spec4, rng_seed=7)
        sizes = sorted(len(l.members) for l in root.leaves())
        assert sizes in ([1, 4], [2, 3])
        check_tree(root, clients, plan, unit_spec4)
        again = recursive_kmeans(clients, plan, unit_spec4, rng_seed=7)
        assert again.to_json() == root.to_json()

    def test_best_fit_vehicle(self):
        spec = FleetSpec.from_capacities([10, 3])
        plan = FleetPlan(counts=(("t0", 1), ("t1", 1)), total_capacity=13, slack=10)
        clients = clients_from(neighbourhood_points(2, n=3))
        root = recursive_kmeans(clients, plan, spec)
        assert root.vehicle.capacity == 3

    def test_unassignable_client(self):
        spec = FleetSpec.from_capacities([4])
        plan = plan_fleet(9, spec)
        clients = [Client(1, GeoPoint(33.9, 35.5), 5), Client(2, GeoPoint(34.0, 35.6), 4)]
        with pytest.raises(UnassignableClient) as info:
            recursive_kmeans(clients, plan, spec)
        assert info.value.client_id == 1

    def test_exhausted_fleet(self):
        spec = FleetSpec.from_capacities([4, 6])
        clients = clients_from(neighbourhood_points(3, n=10))
        plan = FleetPlan(counts=(("t0", 1), ("t1", 0)), total_capacity=4, slack=-6)
        with pytest.raises(FleetExhausted):
            recursive_kmeans(clients, plan, spec)

    def test_identical_locations_fall_back_to_median_split(self, unit_spec4):
        clients = [Client(i, GeoPoint(33.9, 35.5)) for i in range(1, 9)]
        plan = plan_fleet(8, unit_spec4)
        root = recursive_kmeans(clients, plan, unit_spec4)
        assert root.split == "median"
        check_tree(root, clients, plan, unit_spec4)

    @pytest.mark.parametrize("seed", range(40))
    def test_invariants_with_generous_fleet(self, seed):
        rng = random.Random(seed)
        caps = rng.choice(CAPACITY_SETS)
        spec = FleetSpec.from_capacities(caps)
        clients = random_clients(seed, demands=(1, 1, 2))
        total = sum(c.demand for c in clients)
        # one spare vehicle per leaf is always enough
        plan = FleetPlan(counts=tuple((t.type_id, total) for t in spec.types), total_capacity=0, slack=0)
        root = recursive_kmeans(clients, plan, spec, rng_seed=seed)
        check_tree(root, clients, plan, spec)

    def test_tree_json_shape(self, unit_spec4):
        clients = clients_from(two_groups(per_group=4))
        root = recursive_kmeans(clients, plan_fleet(8, unit_spec4), unit_spec4)
        doc = root.to_json()
        assert set(doc) == {"members", "centroid", "demand", "vehicle", "left", "right"}
        assert doc["vehicle"] is None
        assert doc["left"]["vehicle"]["capacity"] == 4
        assert doc["left"]["left"] is None

    def test_rejects_bad_input(self, unit_spec4):
        with pytest.raises(ValueError):
            recursive_kmeans([], plan_fleet(0, unit_spec4), unit_spec4)
        dup = [Client(1, GeoPoint(0, 0)), Client(1, GeoPoint(1, 1))]
        with pytest.raises(ValueError):
            recursive_kmeans(dup, plan_fleet(2, unit_spec4), unit_spec4)


class TestClient:
    def test_depot_id_reserved(self):
        with pytest.raises(ValueError):
            Client(0, GeoPoint(0, 0))

    def test_positive_demand(self):
        with pytest.raises(ValueError):
            Client(1, GeoPoint(0, 0), 0)
