"""Binary undirected network with O(1) tie access/toggle and dyad indexing.

Adjacency is stored as one bitset row per node (``uint64`` words), which
gives constant-time tie lookup and toggling plus cheap common-neighbor
counts via word-wise AND + popcount.  Dyads {i, j} with i < j are also
addressable through a canonical linear index (row-major over i < j); that
ordering is shared by the enumeration sweep, the samplers and the
pseudolikelihood design matrix.
"""

from __future__ import annotations

from typing import Iterable, Iterator, NamedTuple

import numpy as np

__all__ = [
    "DyadIndex",
    "Network",
    "dyad_count",
    "dyad_arrays",
    "linear_dyad_index",
    "parse_edgelist_text",
    "format_edgelist_text",
]


class DyadIndex(NamedTuple):
    """An unordered node pair, normalized to i < j."""

    i: int
    j: int


def as_dyad(i: int, j: int, n: int) -> DyadIndex:
    """Validate and normalize a node pair to a DyadIndex for an n-node network."""
    if i == j:
        raise ValueError(f"self-loop dyad ({i},{i}) is not allowed")
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"dyad ({i},{j}) out of range for n={n}")
    return DyadIndex(i, j) if i < j else DyadIndex(j, i)


def dyad_count(n: int) -> int:
    """Number of unordered node pairs on n nodes: n(n-1)/2."""
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    return n * (n - 1) // 2


def linear_dyad_index(i: int, j: int, n: int) -> int:
    """Canonical linear index of dyad {i,j}, row-major over i < j."""
    i, j = as_dyad(i, j, n)
    # dyads (0,1)..(0,n-1) come first, then (1,2).. etc.
    return i * n - i * (i + 1) // 2 + (j - i - 1)


_DYAD_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def dyad_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(rows, cols) int64 arrays mapping linear dyad index -> (i, j), i < j."""
    cached = _DYAD_CACHE.get(n)
    if cached is not None:
        return cached
    d = dyad_count(n)
    rows = np.empty(d, dtype=np.int64)
    cols = np.empty(d, dtype=np.int64)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            rows[k] = i
            cols[k] = j
            k += 1
    _DYAD_CACHE[n] = (rows, cols)
    return rows, cols


class Network:
    """Simple undirected binary graph on n labeled nodes (0-based).

    Mutation (`toggle`, `add_edge`, ...) is in place; callers that need
    value semantics copy first.  The edge count is cached and kept
    consistent by every mutator.
    """

    __slots__ = ("n", "words", "_edge_count")

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"node count must be >= 1, got {n}")
        self.n = n
        nwords = (n + 63) // 64
        self.words = np.zeros((n, nwords), dtype=np.uint64)
        self._edge_count = 0

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Network":
        net = cls(n)
        for i, j in edges:
            net.add_edge(i, j)
        return net

    @classmethod
    def from_adjacency(cls, a: np.ndarray) -> "Network":
        a = np.asarray(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency diagonal must be zero")
        n = a.shape[0]
        net = cls(n)
        ii, jj = np.nonzero(np.triu(a, 1))
        for i, j in zip(ii.tolist(), jj.tolist()):
            net.add_edge(i, j)
        return net

    # -- tie access ----------------------------------------------------

    def has_edge(self, i: int, j: int) -> bool:
        i, j = as_dyad(i, j, self.n)
        return bool((int(self.words[i, j >> 6]) >> (j & 63)) & 1)

    def toggle(self, i: int, j: int) -> bool:
        """Flip the tie at {i,j}; returns the new tie value."""
        i, j = as_dyad(i, j, self.n)
        bit_j = np.uint64(1) << np.uint64(j & 63)
        bit_i = np.uint64(1) << np.uint64(i & 63)
        self.words[i, j >> 6] ^= bit_j
        self.words[j, i >> 6] ^= bit_i
        present = bool((int(self.words[i, j >> 6]) >> (j & 63)) & 1)
        self._edge_count += 1 if present else -1
        return present

    def add_edge(self, i: int, j: int) -> None:
        if not self.has_edge(i, j):
            self.toggle(i, j)

    def remove_edge(self, i: int, j: int) -> None:
        if self.has_edge(i, j):
            self.toggle(i, j)

    # -- whole-network queries ------------------------------------------

    @property
    def edge_count(self) -> int:
        return self._edge_count

    def density(self) -> float:
        """Edge count over dyad count; requires n >= 2."""
        if self.n < 2:
            raise ValueError("density is undefined for a single-node network")
        return self._edge_count / dyad_count(self.n)

    def degrees(self) -> np.ndarray:
        """Degree of every node, as int64."""
        return _popcount_rows(self.words)

    def degree(self, i: int) -> int:
        return int(_popcount_rows(self.words[i : i + 1])[0])

    def neighbors(self, i: int) -> np.ndarray:
        mask = np.unpackbits(self.words[i].view(np.uint8), bitorder="little")
        return np.nonzero(mask[: self.n])[0]

    def edges(self) -> Iterator[tuple[int, int]]:
        for i in range(self.n):
            for j in self.neighbors(i):
                if j > i:
                    yield (i, int(j))

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.uint8)
        for i, j in self.edges():
            a[i, j] = a[j, i] = 1
        return a

    def copy(self) -> "Network":
        net = Network.__new__(Network)
        net.n = self.n
        net.words = self.words.copy()
        net._edge_count = self._edge_count
        return net

    def permuted(self, perm: Iterable[int]) -> "Network":
        """Relabel nodes: new node perm[v] takes the ties of old node v."""
        perm = list(perm)
        if sorted(perm) != list(range(self.n)):
            raise ValueError("perm must be a permutation of 0..n-1")
        return Network.from_edges(
            self.n, ((perm[i], perm[j]) for i, j in self.edges())
        )

    def recount_edges(self) -> int:
        """Edge count recomputed from the bit matrix (consistency checks)."""
        return int(_popcount_rows(self.words).sum()) // 2

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.words, other.words)

    def __repr__(self) -> str:
        return f"Network(n={self.n}, edges={self._edge_count})"


def _popcount_rows(words: np.ndarray) -> np.ndarray:
    bytes_ = words.view(np.uint8)
    return np.unpackbits(bytes_, axis=-1).sum(axis=-1, dtype=np.int64)


# -- edge-list text format ----------------------------------------------
#
# First non-comment line: ``n <node_count>``; every following line one
# ``<i> <j>`` pair (0-based, whitespace separated).  Lines starting with
# '#' are comments.  Duplicate pairs and self-loops are recorded by the
# parser and resolved by the loader's preprocessing mode.


class EdgeListParseError(ValueError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def parse_edgelist_text(text: str) -> tuple[int, list[tuple[int, int]]]:
    """Parse the edge-list format; returns (n, arcs in file order).

    Arcs are returned raw (directed as written, self-loops included) so
    preprocessing policies can be applied and reported by the caller.
    """
    n = None
    arcs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise EdgeListParseError("expected header 'n <node_count>'", lineno)
            try:
                n = int(parts[1])
            except ValueError:
                raise EdgeListParseError(f"bad node count {parts[1]!r}", lineno) from None
            if n < 1:
                raise EdgeListParseError(f"node count must be >= 1, got {n}", lineno)
            continue
        if len(parts) != 2:
            raise EdgeListParseError(f"expected '<i> <j>', got {line!r}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(f"non-integer node id in {line!r}", lineno) from None
        if not (0 <= i < n and 0 <= j < n):
            raise EdgeListParseError(f"node id out of range 0..{n - 1} in {line!r}", lineno)
        arcs.append((i, j))
    if n is None:
        raise EdgeListParseError("missing 'n <node_count>' header", 0)
    return n, arcs


def format_edgelist_text(net: Network) -> str:
    lines = [f"n {net.n}"]
    lines.extend(f"{i} {j}" for i, j in net.edges())
    return "\n".join(lines) + "\n"
