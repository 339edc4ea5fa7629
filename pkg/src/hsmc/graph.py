"""Pairwise-consistency graphs over correspondences and their per-class split.

Adjacency is kept as one packed bit row per vertex, held in a Python ``int``
(bit ``j`` of ``rows[i]`` is set iff ``i`` and ``j`` are adjacent). Neighbour
intersection is then ``&`` and degree is ``int.bit_count``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corr import CorrespondenceSet, group_by_label
from .errors import CapacityExceeded

DEFAULT_VERTEX_CAP = 50_000
_BLOCK_ROWS = 512


@dataclass(frozen=True, eq=False)
class ConsistencyGraph:
    rows: tuple[int, ...]
    vertex_map: np.ndarray
    class_label: int | None = None

    def __post_init__(self):
        vm = np.array(self.vertex_map, dtype=np.int64).reshape(-1)
        if len(vm) != len(self.rows):
            raise ValueError("vertex_map must have one entry per vertex")
        vm.setflags(write=False)
        object.__setattr__(self, "vertex_map", vm)
        object.__setattr__(self, "rows", tuple(self.rows))

    @property
    def vertex_count(self) -> int:
        return len(self.rows)

    def __len__(self):
        return len(self.rows)

    def adjacent(self, i: int, j: int) -> bool:
        return bool((self.rows[i] >> j) & 1)

    def neighbors(self, v: int) -> list[int]:
        return bits_to_list(self.rows[v])

    def edge_count(self) -> int:
        return sum(r.bit_count() for r in self.rows) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, r in enumerate(self.rows) for j in bits_to_list(r >> (i + 1) << (i + 1))]

    def adjacency_matrix(self) -> np.ndarray:
        n = len(self.rows)
        nbytes = (n + 7) // 8
        packed = np.frombuffer(b"".join(r.to_bytes(nbytes, "little") for r in self.rows), dtype=np.uint8)
        return np.unpackbits(packed.reshape(n, nbytes), axis=1, count=n, bitorder="little").astype(bool)

    def permuted_rows(self, order) -> list[int]:
        """Bit rows of the graph relabelled so that vertex ``order[k]`` becomes ``k``."""
        idx = np.asarray(order, dtype=np.int64)
        return pack_rows(self.adjacency_matrix()[np.ix_(idx, idx)])

    @classmethod
    def from_adjacency(cls, matrix, vertex_map=None, class_label=None) -> ConsistencyGraph:
        m = np.asarray(matrix, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(m, m.T):
            raise ValueError("adjacency must be symmetric")
        m = m.copy()
        np.fill_diagonal(m, False)
        n = len(m)
        vm = np.arange(n) if vertex_map is None else vertex_map
        return cls(tuple(pack_rows(m)), vm, class_label)

    @classmethod
    def from_edges(cls, n: int, edges, **kwargs) -> ConsistencyGraph:
        m = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            if i != j:
                m[i, j] = m[j, i] = True
        return cls.from_adjacency(m, **kwargs)


def bits_to_list(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


def list_to_bits(vertices) -> int:
    x = 0
    for v in vertices:
        x |= 1 << int(v)
    return x


def pack_rows(block: np.ndarray) -> list[int]:
    if len(block) == 0:
        return []
    packed = np.packbits(block, axis=1, bitorder="little")
    raw, w = packed.tobytes(), packed.shape[1]
    return [int.from_bytes(raw[i * w:(i + 1) * w], "little") for i in range(len(packed))]


def _norms(d: np.ndarray) -> np.ndarray:
    return np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2])


def _distance_block(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    # accumulates dx*dx + dy*dy + dz*dz in the same order as _norms
    out = None
    for k in range(3):
        d = rows[:, k, None] - cols[None, :, k]
        d *= d
        out = d if out is None else np.add(out, d, out=out)
    return np.sqrt(out, out=out)


def pair_distance(c: CorrespondenceSet, i: int, j: int) -> float:
    """``| ||m_i - m_j|| - ||n_i' - n_j'|| |`` for pairs ``i`` and ``j``."""
    src, dst = c.src_points, c.dst_points
    return float(np.abs(_norms(src[i] - src[j]) - _norms(dst[i] - dst[j])))


def _build(src: np.ndarray, dst: np.ndarray, threshold: float, vertex_cap: int) -> list[int]:
    n = len(src)
    if n > vertex_cap:
        raise CapacityExceeded(f"{n} vertices exceeds the cap of {vertex_cap}")
    rows: list[int] = []
    for start in range(0, n, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, n)
        ds = _distance_block(src[start:stop], src)
        dd = _distance_block(dst[start:stop], dst)
        block = np.abs(ds - dd) <= threshold
        block[np.arange(stop - start), np.arange(start, stop)] = False
        rows.extend(pack_rows(block))
    return rows


def build_consistency_graph(
    c: CorrespondenceSet,
    epsilon: float,
    threshold_factor: float = 2.0,
    vertex_cap: int = DEFAULT_VERTEX_CAP,
    class_label: int | None = None,
) -> ConsistencyGraph:
    """Edge between pairs ``i, j`` iff their pair distance is ``<= threshold_factor * epsilon``.

    Vertex ``k`` stands for pair ``k`` of ``c``.
    """
    if epsilon <= 0 or threshold_factor <= 0:
        raise ValueError("epsilon and threshold_factor must be positive")
    rows = _build(c.src_points, c.dst_points, threshold_factor * epsilon, vertex_cap)
    return ConsistencyGraph(tuple(rows), np.arange(len(c)), class_label)


def build_class_subgraphs(
    c: CorrespondenceSet,
    epsilon: float,
    threshold_factor: float = 2.0,
    vertex_cap: int = DEFAULT_VERTEX_CAP,
) -> list[ConsistencyGraph]:
    """One consistency graph per class present in a pruned set, ascending class id.

    Each graph is built from that class's pairs only; ``vertex_map`` holds
    positions in ``c``.
    """
    if epsilon <= 0 or threshold_factor <= 0:
        raise ValueError("epsilon and threshold_factor must be positive")
    groups = group_by_label(c)
    src, dst = c.src_points, c.dst_points
    out = []
    for label, idx in groups.items():
        rows = _build(src[idx], dst[idx], threshold_factor * epsilon, vertex_cap)
        out.append(ConsistencyGraph(tuple(rows), idx, label))
    return out


def degree(g: ConsistencyGraph, v: int) -> int:
    return g.rows[v].bit_count()


def induced_subgraph(g: ConsistencyGraph, vertices) -> ConsistencyGraph:
    """Restrict ``g`` to ``vertices`` (in the given order); vertex_map is composed."""
    vs = [int(v) for v in vertices]
    pos = {v: k for k, v in enumerate(vs)}
    if len(pos) != len(vs):
        raise ValueError("duplicate vertices")
    rows = []
    for v in vs:
        r = 0
        for u in bits_to_list(g.rows[v]):
            k = pos.get(u)
            if k is not None:
                r |= 1 << k
        rows.append(r)
    return ConsistencyGraph(tuple(rows), g.vertex_map[np.asarray(vs, dtype=np.int64)], g.class_label)


def write_edge_list(g: ConsistencyGraph, path) -> None:
    """Debug export: one ``"i j"`` line per edge, 0-based, ``i < j``."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for i, j in g.edges():
            fh.write(f"{i} {j}\n")


def read_edge_list(path, n: int) -> ConsistencyGraph:
    edges = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            i, j = line.split()
            edges.append((int(i), int(j)))
    return ConsistencyGraph.from_edges(n, edges)


def random_graph(rng: np.random.Generator, n: int, p: float) -> ConsistencyGraph:
    """Erdos-Renyi G(n, p) sample, for solver testing."""
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return ConsistencyGraph.from_adjacency(upper | upper.T)
