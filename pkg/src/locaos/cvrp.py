"""CVRP instances and route plans.

Instances are Euclidean: a depot plus customers with demands, served by
identical vehicles of a fixed capacity. Node indices are 0-based; the depot
is usually node 0 but is taken from the file when parsing.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class CVRPFormatError(ValueError):
    """Raised when a CVRPLIB/TSPLIB file cannot be parsed."""

    def __init__(self, message, line_no=None, line=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
            if line is not None:
                message += f" ({line.strip()!r})"
        super().__init__(message)
        self.line_no = line_no


class InfeasiblePlan(ValueError):
    """A route plan violates coverage or capacity against its instance."""


def _number(text):
    value = float(text)
    if value.is_integer() and re.fullmatch(r"[+-]?\d+", text.strip()):
        return int(text)
    return value


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


@dataclass(frozen=True, eq=False)
class Instance:
    name: str
    depot: int
    coords: tuple[tuple[float, float], ...]
    demands: tuple[float, ...]
    capacity: float
    min_vehicles: int | None = None
    round_distances: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple((x, y) for x, y in self.coords))
        object.__setattr__(self, "demands", tuple(self.demands))
        if len(self.coords) != len(self.demands):
            raise ValueError("coords and demands must have equal length")
        if len(self.coords) < 2:
            raise ValueError("an instance needs the depot and at least one customer")
        if not 0 <= self.depot < len(self.coords):
            raise ValueError(f"depot index {self.depot} out of range")
        if not self.capacity > 0:
            raise ValueError("capacity must be positive")
        if self.demands[self.depot] != 0:
            raise ValueError("depot demand must be 0")
        for i, d in enumerate(self.demands):
            if d < 0:
                raise ValueError(f"node {i} has negative demand {d}")
            if d > self.capacity:
                raise ValueError(f"node {i} demand {d} exceeds capacity {self.capacity}")
        if self.min_vehicles is not None and self.min_vehicles < 1:
            raise ValueError("min_vehicles must be positive")

    @property
    def n_nodes(self) -> int:
        return len(self.coords)

    @property
    def customers(self) -> list[int]:
        return [i for i in range(self.n_nodes) if i != self.depot]

    @cached_property
    def demand_array(self) -> np.ndarray:
        return np.asarray(self.demands, dtype=float)

    @cached_property
    def dist(self) -> np.ndarray:
        """Full pairwise distance matrix (read-only)."""
        xy = np.asarray(self.coords, dtype=float)
        diff = xy[:, None, :] - xy[None, :, :]
        d = np.sqrt((diff**2).sum(axis=-1))
        if self.round_distances:
            d = np.floor(d + 0.5)
        d.setflags(write=False)
        return d

    def same_as(self, other: "Instance") -> bool:
        return (
            self.name == other.name
            and self.depot == other.depot
            and self.coords == other.coords
            and self.demands == other.demands
            and self.capacity == other.capacity
            and self.min_vehicles == other.min_vehicles
            and self.round_distances == other.round_distances
        )


@dataclass(frozen=True)
class RoutePlan:
    """Customer sequences, one per vehicle; the depot is implicit at both ends."""

    routes: tuple[tuple[int, ...], ...] = field(default_factory=tuple)

    def __post_init__(self):
        routes = tuple(tuple(int(c) for c in r) for r in self.routes)
        object.__setattr__(self, "routes", tuple(r for r in routes if r))

    def __len__(self):
        return len(self.routes)

    def __iter__(self):
        return iter(self.routes)


def check_plan(instance: Instance, plan: RoutePlan) -> None:
    seen = {}
    for k, route in enumerate(plan.routes):
        load = 0
        for c in route:
            if c == instance.depot or not 0 <= c < instance.n_nodes:
                raise InfeasiblePlan(f"route {k} visits invalid node {c}")
            if c in seen:
                raise InfeasiblePlan(f"customer {c} visited twice (routes {seen[c]} and {k})")
            seen[c] = k
            load += instance.demands[c]
        if load > instance.capacity:
            raise InfeasiblePlan(f"route {k} load {load} exceeds capacity {instance.capacity}")
    missing = set(instance.customers) - set(seen)
    if missing:
        raise InfeasiblePlan(f"customers not served: {sorted(missing)[:10]}")


def is_feasible(instance: Instance, plan: RoutePlan) -> bool:
    try:
        check_plan(instance, plan)
    except InfeasiblePlan:
        return False
    return True


def route_length(instance: Instance, route: Sequence[int]) -> float:
    if not route:
        return 0.0
    d = instance.dist
    nodes = [instance.depot, *route, instance.depot]
    return float(sum(d[a, b] for a, b in zip(nodes, nodes[1:])))


def evaluate(instance: Instance, plan: RoutePlan, check: bool = True) -> float:
    """Total travel distance of ``plan``."""
    if check:
        check_plan(instance, plan)
    return sum(route_length(instance, r) for r in plan.routes)


def initial_solution(instance: Instance, n_routes: int | None = None, seed=0) -> RoutePlan:
    """Randomized first-fit: shuffle customers, put each in the first route with room.

    ``n_routes`` routes are opened up front; more are opened when nothing fits.
    Routes left empty are dropped.
    """
    rng = np.random.default_rng(seed)
    if n_routes is None:
        n_routes = max(1, math.ceil(sum(instance.demands) / instance.capacity))
    if n_routes < 1:
        raise ValueError("n_routes must be positive")
    order = [instance.customers[i] for i in rng.permutation(len(instance.customers))]
    routes: list[list[int]] = [[] for _ in range(n_routes)]
    loads = [0.0] * n_routes
    for c in order:
        q = instance.demands[c]
        for k in range(len(routes)):
            if loads[k] + q <= instance.capacity:
                routes[k].append(c)
                loads[k] += q
                break
        else:
            routes.append([c])
            loads.append(q)
    return RoutePlan(tuple(tuple(r) for r in routes))


# UniRand defaults; also echoed into every generated file's comment field.
UNIFORM_DEFAULTS = dict(n_customers=100, capacity=50, demand_lo=1, demand_hi=9)


def generate_uniform_instance(
    n_customers: int = 100,
    capacity: float = 50,
    demand_lo: int = 1,
    demand_hi: int = 9,
    seed: int = 0,
    name: str | None = None,
) -> Instance:
    if n_customers < 1:
        raise ValueError("n_customers must be >= 1")
    if demand_lo < 1 or demand_hi < demand_lo:
        raise ValueError("need 1 <= demand_lo <= demand_hi")
    if demand_hi > capacity:
        raise ValueError("demand_hi exceeds capacity")
    rng = np.random.default_rng(seed)
    xy = rng.random((n_customers + 1, 2))
    demands = rng.integers(demand_lo, demand_hi + 1, size=n_customers)
    return Instance(
        name=name or f"unirand-n{n_customers}-s{seed}",
        depot=0,
        coords=tuple((float(x), float(y)) for x, y in xy),
        demands=(0, *(int(q) for q in demands)),
        capacity=capacity,
    )


# --- CVRPLIB / TSPLIB text format -------------------------------------------

_SECTIONS = ("NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION")


def parse_cvrplib(text: str | Iterable[str], round_distances: bool = False) -> Instance:
    """Parse a CVRPLIB file with EUC_2D weights."""
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = [ln.rstrip("\n") for ln in text]

    spec: dict[str, str] = {}
    spec_line: dict[str, int] = {}
    coords: dict[int, tuple[float, float]] = {}
    demands: dict[int, float] = {}
    demand_line: dict[int, tuple[int, str]] = {}
    depots: list[int] = []
    section = None
    comment = ""

    for no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        head = line.split(":", 1)[0].strip().upper()
        if line.upper() == "EOF":
            break
        if head in _SECTIONS:
            section = head
            continue
        if section is None or (":" in line and not _looks_numeric(line)):
            if ":" not in line:
                raise CVRPFormatError("expected 'KEY : value'", no, raw)
            key, value = (s.strip() for s in line.split(":", 1))
            spec[key.upper()] = value
            spec_line[key.upper()] = no
            if key.upper() == "COMMENT":
                comment = value
            section = None
            continue
        parts = line.split()
        try:
            if section == "NODE_COORD_SECTION":
                if len(parts) != 3:
                    raise ValueError
                coords[int(parts[0])] = (float(parts[1]), float(parts[2]))
            elif section == "DEMAND_SECTION":
                if len(parts) != 2:
                    raise ValueError
                demands[int(parts[0])] = _number(parts[1])
                demand_line[int(parts[0])] = (no, raw)
            elif section == "DEPOT_SECTION":
                node = int(parts[0])
                if node == -1:
                    section = None
                else:
                    depots.append(node)
        except ValueError:
            raise CVRPFormatError(f"malformed {section} entry", no, raw) from None

    for key in ("DIMENSION", "CAPACITY"):
        if key not in spec:
            raise CVRPFormatError(f"missing mandatory keyword {key}")
    weight = spec.get("EDGE_WEIGHT_TYPE")
    if weight is None:
        raise CVRPFormatError("missing mandatory keyword EDGE_WEIGHT_TYPE")
    if weight.upper() != "EUC_2D":
        raise CVRPFormatError(
            f"unsupported EDGE_WEIGHT_TYPE {weight}", spec_line["EDGE_WEIGHT_TYPE"]
        )
    for name, data in (("NODE_COORD_SECTION", coords), ("DEMAND_SECTION", demands),
                       ("DEPOT_SECTION", depots)):
        if not data:
            raise CVRPFormatError(f"missing or empty {name}")
    try:
        dim = int(spec["DIMENSION"])
        capacity = _number(spec["CAPACITY"])
    except ValueError:
        raise CVRPFormatError("non-numeric DIMENSION or CAPACITY") from None

    ids = sorted(coords)
    if len(ids) != dim:
        raise CVRPFormatError(f"DIMENSION is {dim} but NODE_COORD_SECTION has {len(ids)} nodes",
                              spec_line.get("DIMENSION"))
    if sorted(demands) != ids:
        raise CVRPFormatError(f"DIMENSION is {dim} but DEMAND_SECTION has {len(demands)} nodes",
                              spec_line.get("DIMENSION"))
    if len(depots) != 1:
        raise CVRPFormatError("exactly one depot is supported")
    base = {node: k for k, node in enumerate(ids)}
    if depots[0] not in base:
        raise CVRPFormatError(f"depot {depots[0]} is not a listed node")
    depot = base[depots[0]]
    dem = [demands[i] for i in ids]
    for node, q in zip(ids, dem):
        if q > capacity:
            raise CVRPFormatError(f"node {node} demand {q} exceeds capacity {capacity}",
                                  *demand_line[node])
    if dem[depot] != 0:
        raise CVRPFormatError(f"depot {depots[0]} has nonzero demand {dem[depot]}",
                              *demand_line[depots[0]])

    name = spec.get("NAME", "unnamed")
    min_vehicles = None
    for source in (spec.get("VEHICLES"), _k_suffix(name), _k_suffix(comment)):
        if source:
            min_vehicles = int(source)
            break
    return Instance(
        name=name,
        depot=depot,
        coords=tuple(coords[i] for i in ids),
        demands=tuple(dem),
        capacity=capacity,
        min_vehicles=min_vehicles,
        round_distances=round_distances,
    )


def _looks_numeric(line):
    return bool(re.match(r"^[+-]?\d", line))


def _k_suffix(text):
    if not text:
        return None
    m = re.search(r"-k(\d+)\b", text)
    if m:
        return m.group(1)
    m = re.search(r"(?:min(?:imum)?\s*(?:no\.?\s*of\s*)?(?:trucks|vehicles)):\s*(\d+)", text, re.I)
    return m.group(1) if m else None


def read_instance(path, round_distances: bool = False) -> Instance:
    path = str(path)
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".json"):
        inst = instance_from_json(text)
        if round_distances:
            inst = replace(inst, round_distances=True)
        return inst
    return parse_cvrplib(text, round_distances=round_distances)


def write_cvrplib(instance: Instance, comment: str = "") -> str:
    n = instance.n_nodes
    out = [f"NAME : {instance.name}"]
    if comment:
        out.append(f"COMMENT : {comment}")
    out += [
        "TYPE : CVRP",
        f"DIMENSION : {n}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        f"CAPACITY : {_fmt(instance.capacity)}",
    ]
    if instance.min_vehicles is not None:
        out.append(f"VEHICLES : {instance.min_vehicles}")
    out.append("NODE_COORD_SECTION")
    out += [f"{i + 1} {_fmt(x)} {_fmt(y)}" for i, (x, y) in enumerate(instance.coords)]
    out.append("DEMAND_SECTION")
    out += [f"{i + 1} {_fmt(q)}" for i, q in enumerate(instance.demands)]
    out += ["DEPOT_SECTION", f"{instance.depot + 1}", "-1", "EOF", ""]
    return "\n".join(out)


def _fields(instance):
    return dict(
        name=instance.name,
        depot=instance.depot,
        coords=instance.coords,
        demands=instance.demands,
        capacity=instance.capacity,
        min_vehicles=instance.min_vehicles,
        round_distances=instance.round_distances,
    )


def instance_to_json(instance: Instance) -> str:
    data = _fields(instance)
    data["coords"] = [list(p) for p in instance.coords]
    data["demands"] = list(instance.demands)
    return json.dumps(data, indent=1) + "\n"


def instance_from_json(text: str) -> Instance:
    data = json.loads(text)
    data["coords"] = tuple(tuple(p) for p in data["coords"])
    data["demands"] = tuple(data["demands"])
    return Instance(**data)
