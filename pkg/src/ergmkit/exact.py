"""Exact small-graph oracle: exhaustive enumeration of statistic multiplicities.

For small n the 2^{n(n-1)/2} networks are swept in Gray-code order with
incremental statistic updates, producing the multiplicity table
{T value -> count}.  The table gives the exact log normalizing constant,
log likelihood, mean-value map mu(theta) = E_theta[T] and, via Newton on
the moment equation mu(theta) = t_obs, the exact MLE.

An independent brute-force enumerator (`naive_table`) recomputes every
network's statistics from scratch with vectorized bit-column arithmetic;
it shares nothing with the Gray-code path except the dyad ordering and
is used to validate it.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .network import dyad_arrays, dyad_count
from .stats import ModelSpec

__all__ = [
    "EnumerationTable",
    "ExactMleResult",
    "HullBoundaryError",
    "build_table",
    "naive_table",
    "log_normalizer",
    "mean_value",
    "covariance",
    "log_likelihood",
    "exact_mle",
    "default_cache_dir",
]

QUANT = 1e-9  # quantization bucket for continuous statistics before keying

_MAGIC = b"ERGMTBL1"
_VERSION = 1


class HullBoundaryError(RuntimeError):
    """Raised internally when t_obs is not strictly inside the support hull."""


@dataclass
class EnumerationTable:
    """Multiplicity map from statistic vector to network count.

    Rows are sorted lexicographically so equal tables compare equal
    array-wise regardless of how they were built.
    """

    spec: ModelSpec
    n: int
    stats: np.ndarray   # (K, q) float64, distinct statistic values
    counts: np.ndarray  # (K,) float64, exact integers (total = 2^dyads < 2^53)
    log_counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        order = np.lexsort(self.stats.T[::-1])
        self.stats = np.ascontiguousarray(self.stats[order], dtype=np.float64)
        self.counts = np.ascontiguousarray(self.counts[order], dtype=np.float64)
        if np.any(self.counts < 1):
            raise ValueError("table has non-positive multiplicities")
        self.log_counts = np.log(self.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def entries(self) -> dict[tuple, int]:
        return {
            tuple(row): int(c)
            for row, c in zip(self.stats.tolist(), self.counts.tolist())
        }

    # -- binary cache: fixed-size header, then fixed-width entries -------

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        k, q = self.stats.shape
        header = _MAGIC + struct.pack(
            "<II64sIQ", _VERSION, self.n,
            self.spec.fingerprint().encode("ascii"), q, k,
        )
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "wb") as fh:
            fh.write(header)
            fh.write(self.stats.astype("<f8").tobytes())
            fh.write(self.counts.astype("<u8").tobytes())
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path, spec: ModelSpec, n: int) -> "EnumerationTable":
        path = Path(path)
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != _MAGIC:
                raise ValueError(f"{path}: not an enumeration table")
            version, n_file, fp, q, k = struct.unpack("<II64sIQ", fh.read(84))
            if version != _VERSION:
                raise ValueError(f"{path}: unsupported table version {version}")
            if n_file != n or fp.decode("ascii") != spec.fingerprint():
                raise ValueError(f"{path}: table does not match spec/n")
            stats = np.frombuffer(fh.read(8 * k * q), dtype="<f8").reshape(k, q)
            counts = np.frombuffer(fh.read(8 * k), dtype="<u8").astype(np.float64)
        return cls(spec=spec, n=n, stats=stats.copy(), counts=counts)


def default_cache_dir() -> Path:
    import os

    env = os.environ.get("ERGMKIT_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "ergmkit"


def _cache_path(spec: ModelSpec, n: int, cache_dir: str | Path | None) -> Path:
    base = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    return base / f"enum-{spec.fingerprint()[:16]}-n{n}.tbl"


def build_table(
    spec: ModelSpec,
    n: int,
    *,
    max_n_guard: int = 9,
    cache_dir: str | Path | None = None,
    use_cache: bool = True,
) -> EnumerationTable:
    """Enumerate all networks on n nodes, visiting each exactly once.

    Guarded by max_n_guard (default 9: 2^36 states, minutes of runtime);
    results are cached on disk keyed by (spec fingerprint, n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > max_n_guard:
        raise ValueError(
            f"n={n} exceeds the enumeration guard {max_n_guard} "
            f"(2^{dyad_count(n)} states)"
        )
    path = _cache_path(spec, n, cache_dir)
    if use_cache and path.exists():
        return EnumerationTable.load(path, spec, n)

    tbl = spec.compiled(n)
    d = dyad_count(n)
    rows, cols = dyad_arrays(n)

    if tbl.all_integer:
        sizes = tbl.int_upper + 1
        cells = int(np.prod(sizes.astype(np.float64)))
        if cells <= 1 << 27:
            table = _build_dense(spec, n, d, rows, cols, sizes, cells)
        else:
            table = _build_quantized(spec, n, d, rows, cols)
    else:
        table = _build_quantized(spec, n, d, rows, cols)

    if use_cache:
        table.save(path)
    return table


def _empty_stats(spec: ModelSpec, n: int) -> np.ndarray:
    """T of the empty network (only degree-0 counts are nonzero)."""
    from .stats import DegreeCount

    out = np.zeros(spec.q, dtype=np.float64)
    for t, term in enumerate(spec.terms):
        if isinstance(term, DegreeCount) and term.degree == 0:
            out[t] = n
    return out


def _block_bits(d: int) -> int:
    # enough blocks to load all threads, bounded to keep per-block seeding cheap
    import numba

    threads = numba.get_num_threads()
    if d <= 16:
        return 0
    b = max(4, int(np.ceil(np.log2(threads * 8))))
    return min(b, d - 12)


def _build_dense(spec, n, d, rows, cols, sizes, cells) -> EnumerationTable:
    tbl = spec.compiled(n)
    b = _block_bits(d)
    while (1 << b) * cells * 8 > 2 << 30 and b > 0:
        b -= 1
    strides = np.ones(spec.q, dtype=np.int64)
    for t in range(spec.q - 2, -1, -1):
        strides[t] = strides[t + 1] * sizes[t + 1]
    counts = np.zeros((1 << b, cells), dtype=np.int64)
    empty = _empty_stats(spec, n).astype(np.int64)
    _kernels.sweep_dense(
        n, rows, cols, b, tbl.base_int, tbl.dgain_int, tbl.is_triangle,
        empty, strides, counts,
    )
    flat = counts.sum(axis=0)
    nz = np.nonzero(flat)[0]
    stat_rows = np.empty((nz.size, spec.q), dtype=np.float64)
    rem = nz.copy()
    for t in range(spec.q):
        stat_rows[:, t] = rem // strides[t]
        rem = rem % strides[t]
    return EnumerationTable(spec=spec, n=n, stats=stat_rows,
                            counts=flat[nz].astype(np.float64))


def _build_quantized(spec, n, d, rows, cols, chunk_bits: int | None = None) -> EnumerationTable:
    tbl = spec.compiled(n)
    b = max(0, d - 22) if chunk_bits is None else chunk_bits
    m = d - b
    keys = np.empty((1 << m, spec.q), dtype=np.int64)
    empty = _empty_stats(spec, n)
    int_mask = tbl.integer_mask.astype(np.uint8)
    parts: list[tuple[np.ndarray, np.ndarray]] = []
    for prefix in range(1 << b):
        _kernels.sweep_chunk_keys(
            n, rows, cols, prefix, b, tbl.dgain, tbl.nweight, tbl.is_triangle,
            int_mask, empty, QUANT, keys,
        )
        uniq, cnt = np.unique(keys, axis=0, return_counts=True)
        parts.append((uniq, cnt))
    all_keys = np.concatenate([p[0] for p in parts], axis=0)
    all_cnt = np.concatenate([p[1] for p in parts], axis=0)
    uniq, inverse = np.unique(all_keys, axis=0, return_inverse=True)
    merged = np.zeros(uniq.shape[0], dtype=np.float64)
    np.add.at(merged, inverse, all_cnt.astype(np.float64))
    stat_rows = uniq.astype(np.float64)
    for t in range(spec.q):
        if not tbl.integer_mask[t]:
            stat_rows[:, t] *= QUANT
    return EnumerationTable(spec=spec, n=n, stats=stat_rows, counts=merged)


def naive_table(spec: ModelSpec, n: int, *, max_n_guard: int = 7) -> EnumerationTable:
    """Independent brute-force oracle: per-network statistics from scratch.

    Walks every adjacency state as a bit column matrix and evaluates each
    term by direct definition (degree tables, explicit triangle triples).
    Quadratic memory in 2^dyads; guarded to small n.
    """
    if n > max_n_guard:
        raise ValueError(f"naive enumeration guarded to n <= {max_n_guard}")
    from .stats import (
        DegreeCount, Edges, GwDegree, KStar, NodeCovariateSum, Triangles,
    )

    d = dyad_count(n)
    size = 1 << d
    states = np.arange(size, dtype=np.int64)
    rows, cols = dyad_arrays(n)
    bits = ((states[:, None] >> np.arange(d, dtype=np.int64)[None, :]) & 1).astype(np.uint8)
    deg = np.zeros((size, n), dtype=np.int16)
    for k in range(d):
        deg[:, rows[k]] += bits[:, k]
        deg[:, cols[k]] += bits[:, k]

    lin = {}
    for k in range(d):
        lin[(int(rows[k]), int(cols[k]))] = k

    columns = []
    for term in spec.terms:
        if isinstance(term, Edges):
            col = bits.sum(axis=1, dtype=np.int64).astype(np.float64)
        elif isinstance(term, Triangles):
            tri = np.zeros(size, dtype=np.int64)
            for i in range(n):
                for j in range(i + 1, n):
                    for k in range(j + 1, n):
                        tri += (
                            bits[:, lin[(i, j)]]
                            & bits[:, lin[(i, k)]]
                            & bits[:, lin[(j, k)]]
                        )
            col = tri.astype(np.float64)
        elif isinstance(term, KStar):
            lut = np.array([comb(v, term.k) for v in range(n)], dtype=np.float64)
            col = lut[deg].sum(axis=1)
        elif isinstance(term, DegreeCount):
            col = (deg == term.degree).sum(axis=1).astype(np.float64)
        elif isinstance(term, GwDegree):
            u = 1.0 - np.exp(-term.decay)
            lut = np.exp(term.decay) * (1.0 - u ** np.arange(n))
            col = lut[deg].sum(axis=1)
        elif isinstance(term, NodeCovariateSum):
            cov = np.asarray(term.values, dtype=np.float64)
            col = (deg * cov[None, :]).sum(axis=1)
        else:
            raise TypeError(f"unknown term {term!r}")
        columns.append(col)

    mat = np.stack(columns, axis=1)
    keys = np.empty_like(mat, dtype=np.int64)
    int_mask = spec.integer_valued()
    for t in range(spec.q):
        if int_mask[t]:
            keys[:, t] = np.rint(mat[:, t]).astype(np.int64)
        else:
            keys[:, t] = np.rint(mat[:, t] / QUANT).astype(np.int64)
    uniq, cnt = np.unique(keys, axis=0, return_counts=True)
    stat_rows = uniq.astype(np.float64)
    for t in range(spec.q):
        if not int_mask[t]:
            stat_rows[:, t] *= QUANT
    return EnumerationTable(spec=spec, n=n, stats=stat_rows,
                            counts=cnt.astype(np.float64))


# -- exact quantities over a table ----------------------------------------


def log_normalizer(table: EnumerationTable, theta: np.ndarray) -> float:
    """log k(theta) = log sum over networks of exp(theta . T)."""
    theta = np.asarray(theta, dtype=np.float64)
    return float(logsumexp(table.log_counts + table.stats @ theta))


def _weights(table: EnumerationTable, theta: np.ndarray) -> np.ndarray:
    logw = table.log_counts + table.stats @ np.asarray(theta, dtype=np.float64)
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def mean_value(table: EnumerationTable, theta: np.ndarray) -> np.ndarray:
    """mu(theta) = E_theta[T] = gradient of log k."""
    return _weights(table, theta) @ table.stats


def covariance(table: EnumerationTable, theta: np.ndarray) -> np.ndarray:
    """Cov_theta(T) = Hessian of log k."""
    w = _weights(table, theta)
    centered = table.stats - w @ table.stats
    return (centered * w[:, None]).T @ centered


def log_likelihood(table: EnumerationTable, theta: np.ndarray, t_obs: np.ndarray) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    t_obs = np.asarray(t_obs, dtype=np.float64)
    return float(theta @ t_obs - log_normalizer(table, theta))


@dataclass
class ExactMleResult:
    theta: np.ndarray | None
    loglik: float | None
    mean_value: np.ndarray | None
    exists: bool
    recession_direction: np.ndarray | None = None
    iterations: int = 0


def _min_norm_point(points: np.ndarray, iters: int = 400) -> np.ndarray:
    """Frank-Wolfe minimum-norm point in the convex hull of `points`.

    Iterative support-point maximization: at x, move toward the support
    point minimizing the inner product with x.  Returns the final iterate;
    a norm bounded away from zero certifies that the origin lies outside
    the hull (so t_obs is outside the statistic hull).
    """
    x = points[np.argmin(np.einsum("ij,ij->i", points, points))].astype(np.float64)
    for _ in range(iters):
        s = points[np.argmin(points @ x)]
        gap = x @ x - x @ s
        if gap <= 1e-12 * max(1.0, x @ x):
            break
        dvec = x - s
        denom = dvec @ dvec
        if denom <= 0:
            break
        gamma = min(1.0, max(0.0, (x @ dvec) / denom))
        x = x - gamma * dvec
    return x


def exact_mle(
    table: EnumerationTable,
    t_obs: np.ndarray,
    *,
    grad_tol: float = 1e-10,
    max_iter: int = 200,
    theta_bound: float = 25.0,
    face_bound: float = 15.0,
) -> ExactMleResult:
    """Solve mu(theta) = t_obs by Newton with exact moments.

    The MLE exists iff t_obs lies strictly inside the convex hull of the
    statistic support.  Targets at or beyond a coordinate's support range
    sit on an axis-aligned face and are rejected exactly; strictly-outside
    targets are rejected by a minimum-norm-point certificate.  Oblique
    boundary targets surface as Newton divergence: the parameter norm
    grows without bound (the gradient can vanish numerically first, so
    any "solution" with sup-norm above face_bound is treated as
    nonexistent too), and the direction of recession is reported.
    """
    t_obs = np.asarray(t_obs, dtype=np.float64)
    q = table.stats.shape[1]

    # axis-aligned faces: a coordinate pinned at (or past) its support
    # extreme has a recession direction along that axis, exactly
    lo = table.stats.min(axis=0)
    hi = table.stats.max(axis=0)
    for k in range(q):
        if hi[k] > lo[k]:
            if t_obs[k] <= lo[k]:
                direction = np.zeros(q)
                direction[k] = -1.0
                return ExactMleResult(theta=None, loglik=None, mean_value=None,
                                      exists=False, recession_direction=direction)
            if t_obs[k] >= hi[k]:
                direction = np.zeros(q)
                direction[k] = 1.0
                return ExactMleResult(theta=None, loglik=None, mean_value=None,
                                      exists=False, recession_direction=direction)

    scale = 1.0 + np.abs(table.stats).max()
    x = _min_norm_point(table.stats - t_obs)
    xnorm = float(np.sqrt(x @ x))
    if xnorm > 1e-6 * scale:
        direction = -x / xnorm
        return ExactMleResult(
            theta=None, loglik=None, mean_value=None, exists=False,
            recession_direction=direction,
        )

    theta = np.zeros(q)
    ll = log_likelihood(table, theta, t_obs)
    for it in range(1, max_iter + 1):
        mu = mean_value(table, theta)
        grad = t_obs - mu
        if np.abs(grad).max() <= grad_tol:
            if np.abs(theta).max() > face_bound:
                # gradient vanished only because the fit ran off toward a
                # face (e.g. a count coordinate pinned near its minimum)
                norm = float(np.linalg.norm(theta))
                return ExactMleResult(
                    theta=None, loglik=None, mean_value=None, exists=False,
                    recession_direction=theta / norm, iterations=it,
                )
            return ExactMleResult(
                theta=theta, loglik=ll, mean_value=mu, exists=True,
                iterations=it,
            )
        sigma = covariance(table, theta)
        try:
            step = np.linalg.solve(sigma, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(sigma, grad, rcond=None)[0]
        cap = np.abs(step).max()
        if cap > 5.0:
            step *= 5.0 / cap
        if np.abs(grad).max() <= 1e-6:
            # quadratic zone: likelihood gains are below float resolution,
            # so line search would stall; plain Newton converges here
            theta = theta + step
            ll = log_likelihood(table, theta, t_obs)
        else:
            alpha = 1.0
            for _ in range(60):
                cand = theta + alpha * step
                ll_new = log_likelihood(table, cand, t_obs)
                if ll_new >= ll:
                    break
                alpha *= 0.5
            theta = theta + alpha * step
            ll = log_likelihood(table, theta, t_obs)
        if np.abs(theta).max() > theta_bound:
            norm = float(np.linalg.norm(theta))
            return ExactMleResult(
                theta=None, loglik=None, mean_value=None, exists=False,
                recession_direction=theta / norm, iterations=it,
            )
    mu = mean_value(table, theta)
    grad = t_obs - mu
    return ExactMleResult(
        theta=theta, loglik=ll, mean_value=mu,
        exists=bool(np.abs(grad).max() <= grad_tol), iterations=max_iter,
    )
