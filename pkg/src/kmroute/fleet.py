"""Fleet composition: how many vehicles of each type to field.

The relaxed problem ``sum(x_i * c_i) = n`` is solved with Newton-Raphson
using the least-norm step, then rounded to an integer plan that covers
``n`` with the least spare capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence


class FleetError(Exception):
    pass


class InsufficientFleet(FleetError):
    def __init__(self, needed: int, available: int) -> None:
        super().__init__(f"insufficient fleet: need capacity {needed}, fleet offers {available}")
        self.needed = needed
        self.available = available


class NewtonDidNotConverge(FleetError):
    def __init__(self, last_iterate: list[float], residual: float, iterations: int) -> None:
        super().__init__(
            f"Newton iteration did not reach tolerance after {iterations} steps "
            f"(|F| = {residual:g})"
        )
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class VehicleType:
    type_id: str
    capacity: int
    max_count: Optional[int] = None  # None means unbounded

    def __post_init__(self) -> None:
        if int(self.capacity) != self.capacity or self.capacity < 1:
            raise ValueError(f"vehicle capacity must be a positive integer, got {self.capacity}")
        if self.max_count is not None and (int(self.max_count) != self.max_count or self.max_count < 1):
            raise ValueError(f"max_count must be a positive integer or None, got {self.max_count}")


@dataclass(frozen=True)
class FleetSpec:
    types: tuple[VehicleType, ...]

    def __post_init__(self) -> None:
        if not self.types:
            raise ValueError("fleet needs at least one vehicle type")
        ids = [t.type_id for t in self.types]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate vehicle type ids: {ids}")

    @classmethod
    def from_capacities(cls, capacities: Sequence[int], max_counts: Optional[Sequence[Optional[int]]] = None) -> "FleetSpec":
        if max_counts is None:
            max_counts = [None] * len(capacities)
        return cls(tuple(
            VehicleType(f"t{i}", c, m) for i, (c, m) in enumerate(zip(capacities, max_counts))
        ))

    @property
    def capacities(self) -> list[int]:
        return [t.capacity for t in self.types]

    def capacity_of(self, type_id: str) -> int:
        for t in self.types:
            if t.type_id == type_id:
                return t.capacity
        raise KeyError(type_id)


@dataclass(frozen=True)
class Vehicle:
    type_id: str
    index: int
    capacity: int


@dataclass(frozen=True)
class FleetPlan:
    counts: tuple[tuple[str, int], ...]
    total_capacity: int
    slack: int
    relaxed: tuple[float, ...] = field(default=(), compare=False)

    def count_vector(self) -> tuple[int, ...]:
        return tuple(c for _, c in self.counts)

    @property
    def vehicle_count(self) -> int:
        return sum(self.count_vector())

    def vehicles(self, spec: FleetSpec) -> list[Vehicle]:
        """Expand counts into individual vehicles, in type order."""
        out = []
        for type_id, count in self.counts:
            cap = spec.capacity_of(type_id)
            out.extend(Vehicle(type_id, i, cap) for i in range(count))
        return out


@dataclass(frozen=True)
class NewtonConfig:
    epsilon: float = 1e-9
    max_iterations: int = 50
    x0: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.x0 is not None and any(v < 0 for v in self.x0):
            raise ValueError("x0 components must be nonnegative")


@dataclass
class NewtonResult:
    x: list[float]
    iterations: int
    residual: float
    history: list[list[float]] = field(default_factory=list)


def newton_solve(n: float, spec: FleetSpec, cfg: NewtonConfig = NewtonConfig()) -> NewtonResult:
    """Solve ``sum(x_i * c_i) - n = 0`` by Newton-Raphson.

    One equation in ``t`` unknowns: the Jacobian is the constant row of
    capacities, and each step is the minimum-norm solution of the
    linearised equation, ``d = -F(x) * J^T / (J J^T)``.
    """
    if n < 0:
        raise ValueError("client count must be nonnegative")
    caps = [float(c) for c in spec.capacities]
    t = len(caps)
    if cfg.x0 is None:
        x = [0.0] * t
    else:
        if len(cfg.x0) != t:
            raise ValueError(f"x0 has {len(cfg.x0)} components, fleet has {t} types")
        x = [float(v) for v in cfg.x0]

    def residual(v: list[float]) -> float:
        return math.fsum(vi * ci for vi, ci in zip(v, caps)) - n

    jj = math.fsum(c * c for c in caps)
    history = [list(x)]
    iterations = 0
    f = residual(x)
    while abs(f) > cfg.epsilon:
        if iterations >= cfg.max_iterations:
            raise NewtonDidNotConverge(x, abs(f), iterations)
        x = [xi - f * ci / jj for xi, ci in zip(x, caps)]
        iterations += 1
        history.append(list(x))
        f = residual(x)
    return NewtonResult(x=x, iterations=iterations, residual=abs(f), history=history)


def _search_bound(n: int, spec: FleetSpec) -> int:
    # any unbounded type alone reaches n with slack < its capacity
    if any(t.max_count is None for t in spec.types):
        return n + max(spec.capacities) - 1
    return sum(t.max_count * t.capacity for t in spec.types)


def integerize(x_star: Sequence[float], n: int, spec: FleetSpec) -> FleetPlan:
    """Round a relaxed fleet vector to an integer plan.

    The plan covers ``n`` with minimal slack; ties go to the plan with the
    fewest vehicles, then to the lexicographically smallest count vector.
    ``x_star`` is kept on the plan for reference but does not steer the
    rounding, since the integer optimum is fully determined by the ranking.
    """
    if len(x_star) != len(spec.types):
        raise ValueError("x_star length does not match fleet")
    relaxed = tuple(max(0.0, float(v)) for v in x_star)
    if n < 0:
        raise ValueError("client count must be nonnegative")
    if all(t.max_count is not None for t in spec.types):
        available = sum(t.max_count * t.capacity for t in spec.types)
        if available < n:
            raise InsufficientFleet(n, available)

    bound = _search_bound(n, spec)
    # best[s] = (vehicle count, count prefix) over the types seen so far
    best: dict[int, tuple[int, tuple[int, ...]]] = {0: (0, ())}
    for vt in spec.types:
        nxt: dict[int, tuple[int, tuple[int, ...]]] = {}
        for s, (used, prefix) in best.items():
            k = 0
            while s + k * vt.capacity <= bound and (vt.max_count is None or k <= vt.max_count):
                key = (used + k, prefix + (k,))
                total = s + k * vt.capacity
                if total not in nxt or key < nxt[total]:
                    nxt[total] = key
                k += 1
        best = nxt

    for total in range(n, bound + 1):
        if total in best:
            _, counts = best[total]
            return FleetPlan(
                counts=tuple((t.type_id, c) for t, c in zip(spec.types, counts)),
                total_capacity=total,
                slack=total - n,
                relaxed=relaxed,
            )
    raise InsufficientFleet(n, bound)  # pragma: no cover - bound always reachable


def plan_fleet(n: int, spec: FleetSpec, cfg: NewtonConfig = NewtonConfig()) -> FleetPlan:
    result = newton_solve(n, spec, cfg)
    return integerize(result.x, n, spec)
