"""Exact maximum-clique search by branch and bound with greedy-coloring bounds.

The solver follows the bitset MCQ layout: vertices are renumbered by
descending degree so that "lowest set bit" walks the initial ordering, every
search node colors its candidate set greedily, and candidates are expanded
from the highest color down until ``|C| + color`` can no longer beat the
incumbent. An optional seed clique initialises the incumbent.

``brute_force_max_clique`` is an independent Bron-Kerbosch enumeration used
as a test oracle only.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidSeed, TooLarge
from .graph import ConsistencyGraph, list_to_bits

BRUTE_FORCE_CAP = 30


@dataclass(frozen=True)
class Clique:
    vertices: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(sorted({int(v) for v in self.vertices})))

    @property
    def size(self) -> int:
        return len(self.vertices)

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class SolveReport:
    best_clique: Clique
    nodes_expanded: int
    bound_prunes: int
    budget_hit: bool
    exact: bool
    seed_size: int = 0


def is_clique(g: ConsistencyGraph, vertices) -> bool:
    vs = [int(v) for v in vertices]
    n = len(g)
    if any(v < 0 or v >= n for v in vs):
        raise IndexError("vertex out of range")
    members = list_to_bits(vs)
    return all((members & ~(1 << v)) & ~g.rows[v] == 0 for v in vs)


def _color_classes(P: int, rows, kmin: int = 1) -> tuple[list[int], list[int]]:
    """Greedy sequential coloring of the vertices in bitset ``P``.

    Returns the vertices grouped by ascending color, and their colors
    (1-based); within a color, vertices follow ascending bit index. Vertices
    colored below ``kmin`` are colored but not listed (they cannot improve
    the incumbent, so the search never branches on them).
    """
    verts: list[int] = []
    colors: list[int] = []
    color = 0
    U = P
    while U:
        color += 1
        Q = U
        while Q:
            low = Q & -Q
            v = low.bit_length() - 1
            Q &= ~rows[v]
            Q &= ~low
            U ^= low
            if color >= kmin:
                verts.append(v)
                colors.append(color)
    return verts, colors


def greedy_color_bound(g: ConsistencyGraph, candidates) -> int:
    """Number of colors a greedy sequential coloring uses on ``candidates``.

    Vertices are visited in ascending id; the result upper-bounds the clique
    number of the induced sub-graph.
    """
    _, colors = _color_classes(list_to_bits(candidates), g.rows)
    return colors[-1] if colors else 0


def _degree_order(g: ConsistencyGraph) -> list[int]:
    return sorted(range(len(g)), key=lambda v: (-g.rows[v].bit_count(), v))


def repair_seed(g: ConsistencyGraph, vertices) -> list[int]:
    """Drop members (lowest degree first, then lowest id) until the set is a clique."""
    members = sorted({int(v) for v in vertices})
    while not is_clique(g, members):
        mask = list_to_bits(members)
        bad = [v for v in members if (mask & ~(1 << v)) & ~g.rows[v]]
        drop = min(bad, key=lambda v: (g.rows[v].bit_count(), v))
        members.remove(drop)
    return members


def solve_max_clique(
    g: ConsistencyGraph,
    seed_clique=None,
    node_budget: int | None = None,
    repair: bool = True,
) -> SolveReport:
    """Maximum clique of ``g``.

    ``seed_clique`` (a Clique or any iterable of vertex ids) becomes the
    incumbent; an invalid seed is repaired, or rejected with InvalidSeed when
    ``repair`` is False. With ``node_budget`` the search stops after that many
    expanded nodes and reports the best clique found with ``exact=False``.
    """
    n = len(g)
    seed: list[int] = []
    if seed_clique is not None:
        seed = sorted({int(v) for v in getattr(seed_clique, "vertices", seed_clique)})
        if any(v < 0 or v >= n for v in seed):
            raise InvalidSeed("seed vertex out of range")
        if not is_clique(g, seed):
            if not repair:
                raise InvalidSeed("seed is not a clique")
            seed = repair_seed(g, seed)
    if node_budget is not None and node_budget < 1:
        raise ValueError("node_budget must be at least 1")

    order = _degree_order(g)
    new_of = {v: k for k, v in enumerate(order)}
    rows = g.permuted_rows(order) if n else []

    best = [new_of[v] for v in seed]
    best_size = len(best)
    nodes = 0
    prunes = 0
    budget_hit = False

    if n:
        P0 = (1 << n) - 1
        verts, colors = _color_classes(P0, rows, best_size + 1)
        nodes = 1
        C: list[int] = []
        # frame: [vertices by color, colors, next position (descending), remaining candidates]
        stack = [[verts, colors, len(verts) - 1, P0]]
        while stack:
            frame = stack[-1]
            i = frame[2]
            if i < 0 or len(C) + frame[1][i] <= best_size:
                if i >= 0:
                    prunes += 1
                stack.pop()
                if C:
                    C.pop()
                continue
            v = frame[0][i]
            frame[2] = i - 1
            P = frame[3]
            child = P & rows[v]
            frame[3] = P & ~(1 << v)
            if not child:
                if len(C) + 1 > best_size:
                    best = C + [v]
                    best_size = len(best)
                continue
            if node_budget is not None and nodes >= node_budget:
                budget_hit = True
                # out of budget: close the current branch greedily (highest degree first)
                greedy = C + [v]
                while child:
                    low = child & -child
                    u = low.bit_length() - 1
                    greedy.append(u)
                    child &= rows[u]
                if len(greedy) > best_size:
                    best, best_size = greedy, len(greedy)
                break
            nodes += 1
            C.append(v)
            verts, colors = _color_classes(child, rows, best_size - len(C) + 1)
            stack.append([verts, colors, len(verts) - 1, child])

    clique = Clique(tuple(order[k] for k in best))
    return SolveReport(
        best_clique=clique,
        nodes_expanded=nodes,
        bound_prunes=prunes,
        budget_hit=budget_hit,
        exact=not budget_hit,
        seed_size=len(seed),
    )


def brute_force_max_clique(g: ConsistencyGraph) -> Clique:
    """Exhaustive maximum clique via Bron-Kerbosch with pivoting (oracle, n <= 30)."""
    n = len(g)
    if n > BRUTE_FORCE_CAP:
        raise TooLarge(f"{n} vertices exceeds the oracle cap of {BRUTE_FORCE_CAP}")
    adj = [set() for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and g.adjacent(i, j):
                adj[i].add(j)

    best: list[frozenset] = [frozenset()]

    def bk(R: frozenset, P: set, X: set):
        if not P and not X:
            if len(R) > len(best[0]) or (len(R) == len(best[0]) and sorted(R) < sorted(best[0])):
                best[0] = R
            return
        pivot = max(P | X, key=lambda u: (len(adj[u] & P), -u))
        for v in sorted(P - adj[pivot]):
            bk(R | {v}, P & adj[v], X & adj[v])
            P = P - {v}
            X = X | {v}

    bk(frozenset(), set(range(n)), set())
    return Clique(tuple(best[0]))
