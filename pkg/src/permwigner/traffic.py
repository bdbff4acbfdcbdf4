"""Test graphs, quotients and traffic states.

A test graph has vertices ``0 .. k-1`` and directed labelled edges
``(src, tgt, label)``.  An edge ``e`` reads the matrix entry
``A_label(phi(tgt), phi(src))``, so the directed ``n``-cycle whose edge ``k``
runs from ``v_{k+1}`` to ``v_k`` evaluates ``tr(A_1 ... A_n)``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterator, Mapping, Sequence

import numpy as np

from .entries import EntrySpec, moment_tables
from .errors import BudgetExceededError, DimensionMismatchError, PermWignerError
from .freeprob import CovarianceSpec
from .permutations import EntryPermutation
from .wigner import DEFAULT_MAP_BUDGET, expected_entry_products, iter_maps

MAX_CYCLE = 10

Edge = tuple[int, int, Hashable]


@dataclass(frozen=True)
class TestGraph:
    """A connected edge-labelled multidigraph."""

    __test__ = False  # keep pytest from collecting the class

    n_vertices: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        edges = tuple((int(s), int(t), lab) for s, t, lab in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.n_vertices < 1:
            raise PermWignerError("a test graph needs at least one vertex")
        for s, t, _ in edges:
            if not (0 <= s < self.n_vertices and 0 <= t < self.n_vertices):
                raise PermWignerError(f"edge ({s}, {t}) leaves the vertex set")
        if not self._connected():
            raise PermWignerError("test graphs must be connected")

    def _connected(self) -> bool:
        adj = defaultdict(set)
        for s, t, _ in self.edges:
            adj[s].add(t)
            adj[t].add(s)
        seen, stack = {0}, [0]
        while stack:
            v = stack.pop()
            for w in adj[v] - seen:
                seen.add(w)
                stack.append(w)
        return len(seen) == self.n_vertices

    @property
    def labels(self) -> set:
        return {lab for _, _, lab in self.edges}

    @property
    def loops(self) -> list[Edge]:
        return [e for e in self.edges if e[0] == e[1]]


def cycle_graph(word: Sequence[Hashable]) -> TestGraph:
    """Directed cycle evaluating ``tr`` of the product of ``word``."""
    n = len(word)
    if n == 0:
        return TestGraph(1, ())
    return TestGraph(n, tuple(((k + 1) % n, k, lab) for k, lab in enumerate(word)))


def two_vertex_graph(label, label2, *, congruent: bool = False) -> TestGraph:
    """The 2-edge double tree; twins opposing unless ``congruent``."""
    second = (1, 0, label2) if congruent else (0, 1, label2)
    return TestGraph(2, ((1, 0, label), second))


def path_graph(label, label2, *, fork: bool = False) -> TestGraph:
    """Three vertices joined by two single edges.

    Default is the chain ``v2 -> v1 -> v0``; ``fork`` points both edges out
    of the middle vertex.
    """
    second = (1, 2, label2) if fork else (2, 1, label2)
    return TestGraph(3, ((1, 0, label), second))


def star_graph(label, label2) -> TestGraph:
    """Five-vertex star with single edges, two labelled each way."""
    # centre 0; leaves 1..4
    return TestGraph(5, ((0, 1, label), (2, 0, label2), (3, 0, label2), (0, 4, label)))


# -- text format ----------------------------------------------------------------------


def format_graph(graph: TestGraph) -> str:
    """``V k`` then one ``src tgt label`` line per edge, vertices 1-based."""
    lines = [f"V {graph.n_vertices}"]
    lines += [f"{s + 1} {t + 1} {lab}" for s, t, lab in graph.edges]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> TestGraph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or rows[0][0] != "V" or len(rows[0]) != 2:
        raise PermWignerError("graph text must start with 'V k'")
    k = int(rows[0][1])
    edges = []
    for row in rows[1:]:
        if len(row) != 3:
            raise PermWignerError(f"bad edge line {' '.join(row)!r}")
        edges.append((int(row[0]) - 1, int(row[1]) - 1, row[2]))
    return TestGraph(k, tuple(edges))


def read_graph(path: str | Path) -> TestGraph:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def write_graph(graph: TestGraph, path: str | Path):
    Path(path).write_text(format_graph(graph), encoding="utf-8")


# -- partitions -----------------------------------------------------------------------


def set_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """All restricted-growth strings of length ``n`` (block index per element)."""
    if n == 0:
        yield ()
        return
    rgs = [0] * n

    def rec(i: int, top: int):
        if i == n:
            yield tuple(rgs)
            return
        for b in range(top + 2):
            rgs[i] = b
            yield from rec(i + 1, max(top, b))

    yield from rec(1, 0)


def blocks_of(rgs: Sequence[int]) -> list[list[int]]:
    out = defaultdict(list)
    for v, b in enumerate(rgs):
        out[b].append(v)
    return [out[b] for b in sorted(out)]


def partition_mobius(partition) -> int:
    """``mu(0, pi) = prod_B (-1)^(|B|-1) (|B|-1)!``.

    Accepts a restricted-growth string or a list of blocks.
    """
    blocks = partition
    if partition and not isinstance(partition[0], (list, tuple)):
        blocks = blocks_of(partition)
    out = 1
    for b in blocks:
        s = len(b)
        out *= (-1) ** (s - 1) * math.factorial(s - 1)
    return out


def quotient(graph: TestGraph, partition: Sequence[int]) -> TestGraph:
    """Identify vertices in the same block; ``partition[v]`` is the block of ``v``.

    Block indices are renumbered by first appearance, so a restricted-growth
    string maps vertex ``v`` to block ``partition[v]``.
    """
    if len(partition) != graph.n_vertices:
        raise PermWignerError("partition must assign every vertex to a block")
    relabel = {}
    for b in partition:
        relabel.setdefault(b, len(relabel))
    f = [relabel[b] for b in partition]
    return TestGraph(len(relabel), tuple((f[s], f[t], lab) for s, t, lab in graph.edges))


# -- traffic states of deterministic matrices -------------------------------------------


def _check_budget(graph: TestGraph, n: int, budget: int):
    if n**graph.n_vertices > budget:
        raise BudgetExceededError(f"N^|V| = {n}^{graph.n_vertices} exceeds the map budget {budget}")


def _injective_mask(phi: np.ndarray) -> np.ndarray:
    k = phi.shape[1]
    mask = np.ones(phi.shape[0], dtype=bool)
    for a in range(k):
        for b in range(a + 1, k):
            mask &= phi[:, a] != phi[:, b]
    return mask


def _state(graph, matrices, n, injective, budget) -> complex:
    _check_budget(graph, n, budget)
    for lab in graph.labels:
        m = matrices.get(lab)
        if m is None:
            raise PermWignerError(f"no matrix for label {lab!r}")
        if np.shape(m) != (n, n):
            raise DimensionMismatchError(f"matrix {lab!r} has shape {np.shape(m)}, expected {(n, n)}")
    total = 0j
    for phi in iter_maps(graph.n_vertices, n):
        if injective:
            phi = phi[_injective_mask(phi)]
        prod = np.ones(phi.shape[0], dtype=complex)
        for s, t, lab in graph.edges:
            prod *= np.asarray(matrices[lab])[phi[:, t], phi[:, s]]
        total += prod.sum()
    return total / n


def traffic_state(graph: TestGraph, matrices: Mapping, n: int, budget: int = DEFAULT_MAP_BUDGET) -> complex:
    """``(1/N) sum_phi prod_e A_e(phi(tgt e), phi(src e))`` over all maps."""
    return _state(graph, matrices, n, False, budget)


def injective_traffic_state(graph: TestGraph, matrices: Mapping, n: int, budget: int = DEFAULT_MAP_BUDGET) -> complex:
    """As :func:`traffic_state`, restricted to injective maps."""
    return _state(graph, matrices, n, True, budget)


# -- expected traffic states of permuted Wigner matrices ---------------------------------


def expected_traffic_state(
    graph: TestGraph,
    spec: EntrySpec,
    perms: Mapping,
    n: int,
    *,
    injective: bool = False,
    budget: int = DEFAULT_MAP_BUDGET,
) -> complex:
    """Exact expected traffic state of the permuted copies ``W^{perms[label]}``."""
    _check_budget(graph, n, budget)
    for lab in graph.labels:
        p = perms.get(lab)
        if not isinstance(p, EntryPermutation):
            raise PermWignerError(f"no permutation for label {lab!r}")
        if p.n != n:
            raise DimensionMismatchError(f"permutation {lab!r} has N={p.n}, expected {n}")
    m = len(graph.edges)
    off, diag = moment_tables(spec, max(m, 2))
    total = 0j
    for phi in iter_maps(graph.n_vertices, n):
        if injective:
            phi = phi[_injective_mask(phi)]
        if phi.shape[0] == 0:
            continue
        rows = np.empty((phi.shape[0], m), dtype=np.intp)
        cols = np.empty_like(rows)
        for pos, (s, t, lab) in enumerate(graph.edges):
            rows[:, pos], cols[:, pos] = perms[lab](phi[:, t], phi[:, s])
        total += complex(expected_entry_products(rows, cols, off, diag).sum())
    return total / n ** (1 + m / 2)


def expected_injective_traffic(graph, spec, perms, n, budget: int = DEFAULT_MAP_BUDGET) -> complex:
    return expected_traffic_state(graph, spec, perms, n, injective=True, budget=budget)


def traffic_via_mobius(graph: TestGraph, injective_value) -> complex:
    """``tau[T] = sum_pi tau0[T^pi]`` given a callable for ``tau0``."""
    return sum(injective_value(quotient(graph, p)) for p in set_partitions(graph.n_vertices))


def injective_via_mobius(graph: TestGraph, value) -> complex:
    """``tau0[T] = sum_pi mu(0, pi) tau[T^pi]`` given a callable for ``tau``."""
    return sum(partition_mobius(p) * value(quotient(graph, p)) for p in set_partitions(graph.n_vertices))


# -- double trees ---------------------------------------------------------------------


@dataclass(frozen=True)
class TwinClass:
    vertices: tuple[int, int]
    orientation: str  # "opposing" or "congruent"
    labels: tuple[Hashable, Hashable]


@dataclass(frozen=True)
class DoubleTreeReport:
    is_double_tree: bool
    twin_classes: tuple[TwinClass, ...] = ()
    reason: str = ""

    @property
    def n_congruent(self) -> int:
        return sum(c.orientation == "congruent" for c in self.twin_classes)

    @property
    def n_opposing(self) -> int:
        return sum(c.orientation == "opposing" for c in self.twin_classes)


def classify_double_tree(graph: TestGraph) -> DoubleTreeReport:
    """Decide whether ``graph`` is a double tree and orient its twin edges."""
    if graph.loops:
        return DoubleTreeReport(False, reason="has loops")
    classes = defaultdict(list)
    for e in graph.edges:
        classes[frozenset(e[:2])].append(e)
    if any(len(es) != 2 for es in classes.values()):
        return DoubleTreeReport(False, reason="an edge class has multiplicity other than 2")
    # connected with |V| - 1 simple edges means a tree
    if len(classes) != graph.n_vertices - 1:
        return DoubleTreeReport(False, reason="underlying simple graph is not a tree")
    twins = []
    for key in sorted(classes, key=sorted):
        e, e2 = classes[key]
        orientation = "congruent" if e[0] == e2[0] else "opposing"
        twins.append(TwinClass(tuple(sorted(key)), orientation, (e[2], e2[2])))
    return DoubleTreeReport(True, tuple(twins))


def predicted_injective(graph: TestGraph, cov: CovarianceSpec) -> float:
    """Limit of the injective state: ``K`` per opposing class, ``J`` per congruent one."""
    report = classify_double_tree(graph)
    if not report.is_double_tree:
        return 0.0
    out = 1.0
    for c in report.twin_classes:
        out *= cov.K(*c.labels) if c.orientation == "opposing" else cov.J(*c.labels)
    return out


def cycle_quotient_double_trees(n: int, word: Sequence[Hashable] | None = None) -> list[TestGraph]:
    """Every quotient of the directed ``n``-cycle that is a double tree."""
    if n > MAX_CYCLE:
        raise BudgetExceededError(f"cycle length is limited to {MAX_CYCLE}")
    if n < 1:
        raise PermWignerError("cycle length must be positive")
    word = [0] * n if word is None else list(word)
    if len(word) != n:
        raise PermWignerError("word length must equal n")
    if n % 2:
        return []
    cycle = cycle_graph(word)
    out = []
    for p in set_partitions(n):
        if max(p) + 1 != n // 2 + 1:
            continue  # a double tree on n edges has n/2 + 1 vertices
        q = quotient(cycle, p)
        if classify_double_tree(q).is_double_tree:
            out.append(q)
    return out
