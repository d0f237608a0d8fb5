"""Sufficient statistics and change statistics for configurable term lists.

Every term contributes one coordinate to the statistic vector T(a).  The
change vector at dyad {i,j} is T(a with the tie set) - T(a with the tie
unset), holding the rest of the network fixed.  For all shipped terms the
change decomposes as

    change[t] = gain(deg_i) + gain(deg_j) + [triangle] * |N(i) ∩ N(j)|
                + covariate[i] + covariate[j]

with degrees taken excluding the {i,j} tie itself, so incremental updates
cost O(1) table lookups plus one common-neighbor popcount.  The compiled
per-degree tables below are what the hot loops (sampler, annealer,
enumeration sweep) consume.

Geometrically weighted degree uses the conventional form

    gwd(a) = e^tau * sum_{k>=1} [1 - (1 - e^-tau)^k] * D_k(a)

where D_k is the number of nodes of degree k and tau is a fixed decay
(not an estimated parameter).  Other normalizations exist in the wild;
this one makes the per-endpoint change gain (1 - e^-tau)^deg.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import _kernels
from .network import Network, as_dyad, dyad_arrays

__all__ = [
    "Edges",
    "Triangles",
    "KStar",
    "DegreeCount",
    "GwDegree",
    "NodeCovariateSum",
    "ModelSpec",
    "parse_model_config",
    "stat_vector",
    "change_vector",
    "stat_delta_on_toggle",
]

# term codes used by the compiled tables
_EDGES, _TRIANGLES, _KSTAR, _DEGREE, _GWDEGREE, _NODECOV = range(6)


@dataclass(frozen=True)
class Edges:
    label = "edges"
    integer_valued = True


@dataclass(frozen=True)
class Triangles:
    label = "triangles"
    integer_valued = True


@dataclass(frozen=True)
class KStar:
    k: int
    integer_valued = True

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k-star order must be >= 2, got {self.k}")

    @property
    def label(self) -> str:
        return f"kstar{self.k}"


@dataclass(frozen=True)
class DegreeCount:
    degree: int
    integer_valued = True

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")

    @property
    def label(self) -> str:
        return f"degree{self.degree}"


@dataclass(frozen=True)
class GwDegree:
    decay: float
    integer_valued = False

    def __post_init__(self):
        if not (self.decay > 0):
            raise ValueError(f"gwdegree decay must be positive, got {self.decay}")

    @property
    def label(self) -> str:
        return f"gwdegree{self.decay:g}"


@dataclass(frozen=True)
class NodeCovariateSum:
    """Sum over ties of covariate[i] + covariate[j]."""

    values: tuple[float, ...]
    name: str = "nodecov"
    integer_valued = False

    @property
    def label(self) -> str:
        return self.name


Term = Union[Edges, Triangles, KStar, DegreeCount, GwDegree, NodeCovariateSum]


@dataclass(frozen=True)
class ModelSpec:
    """Ordered term list; the order fixes the coordinate meaning of every
    theta and statistic vector downstream."""

    terms: tuple[Term, ...]

    def __init__(self, terms):
        object.__setattr__(self, "terms", tuple(terms))
        if self.q < 1:
            raise ValueError("a model needs at least one term")

    @property
    def q(self) -> int:
        return len(self.terms)

    def labels(self) -> list[str]:
        return [t.label for t in self.terms]

    def integer_valued(self) -> np.ndarray:
        return np.array([t.integer_valued for t in self.terms], dtype=bool)

    def fingerprint(self) -> str:
        """Stable digest of the term list (keys enumeration caches)."""
        parts = []
        for t in self.terms:
            if isinstance(t, NodeCovariateSum):
                cov = ",".join(repr(float(v)) for v in t.values)
                parts.append(f"nodecov({t.name};{cov})")
            elif isinstance(t, GwDegree):
                parts.append(f"gwdegree({t.decay!r})")
            elif isinstance(t, KStar):
                parts.append(f"kstar({t.k})")
            elif isinstance(t, DegreeCount):
                parts.append(f"degree({t.degree})")
            else:
                parts.append(t.label)
        return hashlib.sha256("|".join(parts).encode()).hexdigest()

    def compiled(self, n: int) -> "CompiledTables":
        key = (self, n)
        tbl = _COMPILE_CACHE.get(key)
        if tbl is None:
            tbl = _compile(self, n)
            _COMPILE_CACHE[key] = tbl
        return tbl


_COMPILE_CACHE: dict = {}


@dataclass
class CompiledTables:
    """Per-degree lookup tables consumed by the numba kernels."""

    n: int
    q: int
    codes: np.ndarray          # int64[q]
    dgain: np.ndarray          # float64[q, n]: per-endpoint add-tie gain by prior degree
    phi: np.ndarray            # float64[q, n]: per-node contribution by degree
    nweight: np.ndarray        # float64[q, n]: node covariate weights (0 unless nodecov)
    is_triangle: np.ndarray    # uint8[q]
    is_nodecov: np.ndarray     # uint8[q]
    integer_mask: np.ndarray   # bool[q]
    # integer fast path (valid only where integer_mask holds for all terms)
    base_int: np.ndarray       # int64[q]: constant part of the add-tie change
    dgain_int: np.ndarray      # int64[q, n]
    int_upper: np.ndarray      # int64[q]: inclusive upper bound of the statistic
    has_triangle: bool = field(default=False)
    all_integer: bool = field(default=False)


def _compile(spec: ModelSpec, n: int) -> CompiledTables:
    q = spec.q
    codes = np.zeros(q, dtype=np.int64)
    dgain = np.zeros((q, n), dtype=np.float64)
    phi = np.zeros((q, n), dtype=np.float64)
    nweight = np.zeros((q, n), dtype=np.float64)
    is_tri = np.zeros(q, dtype=np.uint8)
    is_ncov = np.zeros(q, dtype=np.uint8)
    base_int = np.zeros(q, dtype=np.int64)
    dgain_int = np.zeros((q, n), dtype=np.int64)
    int_upper = np.zeros(q, dtype=np.int64)
    degs = np.arange(n)

    for t, term in enumerate(spec.terms):
        if isinstance(term, Edges):
            codes[t] = _EDGES
            dgain[t, :] = 0.5
            phi[t, :] = degs / 2.0
            base_int[t] = 1
            int_upper[t] = n * (n - 1) // 2
        elif isinstance(term, Triangles):
            codes[t] = _TRIANGLES
            is_tri[t] = 1
            int_upper[t] = math.comb(n, 3)
        elif isinstance(term, KStar):
            codes[t] = _KSTAR
            k = term.k
            dgain[t, :] = [math.comb(d, k - 1) for d in range(n)]
            phi[t, :] = [math.comb(d, k) for d in range(n)]
            dgain_int[t, :] = dgain[t, :].astype(np.int64)
            int_upper[t] = n * math.comb(n - 1, k)
        elif isinstance(term, DegreeCount):
            codes[t] = _DEGREE
            d0 = term.degree
            if d0 < n:
                phi[t, d0] = 1.0
                if d0 >= 1:
                    dgain[t, d0 - 1] += 1.0
                dgain[t, d0] -= 1.0
            dgain_int[t, :] = dgain[t, :].astype(np.int64)
            int_upper[t] = n
        elif isinstance(term, GwDegree):
            codes[t] = _GWDEGREE
            tau = term.decay
            u = 1.0 - math.exp(-tau)
            dgain[t, :] = u ** degs
            phi[t, :] = math.exp(tau) * (1.0 - u ** degs)
        elif isinstance(term, NodeCovariateSum):
            codes[t] = _NODECOV
            vals = np.asarray(term.values, dtype=np.float64)
            if vals.shape != (n,):
                raise ValueError(
                    f"nodecov has {vals.shape[0]} values but the network has {n} nodes"
                )
            is_ncov[t] = 1
            nweight[t, :] = vals
        else:
            raise TypeError(f"unknown term {term!r}")

    integer_mask = spec.integer_valued()
    return CompiledTables(
        n=n,
        q=q,
        codes=codes,
        dgain=dgain,
        phi=phi,
        nweight=nweight,
        is_triangle=is_tri,
        is_nodecov=is_ncov,
        integer_mask=integer_mask,
        base_int=base_int,
        dgain_int=dgain_int,
        int_upper=int_upper,
        has_triangle=bool(is_tri.any()),
        all_integer=bool(integer_mask.all()),
    )


# -- public evaluation API ------------------------------------------------


def stat_vector(spec: ModelSpec, net: Network) -> np.ndarray:
    """Exact T(net), computed from scratch."""
    tbl = spec.compiled(net.n)
    return _kernels.stat_vector_direct(
        tbl.phi, tbl.nweight, tbl.is_triangle, tbl.is_nodecov,
        net.words, net.degrees(),
    )


def change_vector(spec: ModelSpec, net: Network, dyad: tuple[int, int]) -> np.ndarray:
    """T(net with dyad set) - T(net with dyad unset), rest held as observed.

    Independent of the current tie value at the dyad.
    """
    i, j = as_dyad(dyad[0], dyad[1], net.n)
    tbl = spec.compiled(net.n)
    out = np.empty(spec.q, dtype=np.float64)
    _kernels.change_stats(
        tbl.dgain, tbl.nweight, tbl.is_triangle,
        net.words, net.degrees(), i, j, out,
    )
    return out


def stat_delta_on_toggle(spec: ModelSpec, net: Network, dyad: tuple[int, int]) -> np.ndarray:
    """Signed statistic increment if the dyad were toggled now.

    +change_vector when the tie is currently absent, -change_vector when
    present, so stat_vector(after toggle) == stat_vector(before) + delta.
    """
    i, j = as_dyad(dyad[0], dyad[1], net.n)
    delta = change_vector(spec, net, (i, j))
    if net.has_edge(i, j):
        return -delta
    return delta


# -- declarative model config ---------------------------------------------


def parse_model_config(text: str, base_dir: str | Path = ".") -> ModelSpec:
    """Parse a model description, one term per line.

    Recognized lines: ``edges``, ``triangles``, ``kstar <k>``,
    ``degree <d>``, ``gwdegree <decay>``, ``nodecov <file>`` (one real
    per node per line, resolved relative to base_dir).  '#' comments and
    blank lines are ignored.
    """
    terms: list[Term] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        name, args = parts[0].lower(), parts[1:]
        try:
            if name == "edges" and not args:
                terms.append(Edges())
            elif name == "triangles" and not args:
                terms.append(Triangles())
            elif name == "kstar" and len(args) == 1:
                terms.append(KStar(int(args[0])))
            elif name == "degree" and len(args) == 1:
                terms.append(DegreeCount(int(args[0])))
            elif name == "gwdegree" and len(args) == 1:
                terms.append(GwDegree(float(args[0])))
            elif name == "nodecov" and len(args) == 1:
                path = Path(base_dir) / args[0]
                values = tuple(
                    float(v) for v in path.read_text().split()
                )
                terms.append(NodeCovariateSum(values, name=f"nodecov:{args[0]}"))
            else:
                raise ValueError(f"unrecognized model term {line!r}")
        except (ValueError, OSError) as exc:
            raise ValueError(f"model config line {lineno}: {exc}") from exc
    if not terms:
        raise ValueError("model config defines no terms")
    return ModelSpec(terms)
