"""Generate the synthetic transcriptional-regulation-style network shipped
with the package.

The original E. coli operon network (directed, with self-regulating
operons) is not redistributable here, so the packaged dataset is a
seeded synthetic stand-in engineered to match its documented summary
properties: 418 nodes, exactly 519 undirected edges after symmetrizing
and dropping self-loops, a few global regulator hubs over a broad base
of small-degree nodes, and raw-file noise (self-loops, duplicate and
reciprocal arcs) so the preprocessing path is exercised for real.

The undirected skeleton is realized from a prescribed degree profile via
a configuration model, so the degree counts entering the shipped model
terms (degrees 2, 3, 4 and 6) are all comfortably populated.

Run from the repository root:  python tools/make_ecoli_surrogate.py
"""

import hashlib
from pathlib import Path

import networkx as nx
import numpy as np

N = 418
TARGET_EDGES = 519
SEED = 20240917
OUT = Path(__file__).resolve().parents[1] / "src" / "ergmkit" / "data" / "ecoli_trn_synthetic.edges"

HUB_DEGREES = [10, 12, 14, 17, 20, 24, 28, 33, 38, 44, 50, 58]
SMALL_PROFILE = {1: 200, 2: 95, 3: 40, 4: 17, 5: 10, 6: 8, 7: 2}


def main() -> None:
    rng = np.random.default_rng(SEED)

    seq = list(HUB_DEGREES)
    for d, count in SMALL_PROFILE.items():
        seq += [d] * count
    seq += [0] * (N - len(seq))
    assert sum(seq) % 2 == 0, "degree sequence must have even sum"

    g_multi = nx.configuration_model(seq, seed=int(rng.integers(1 << 31)))
    g = nx.Graph(g_multi)  # collapse parallel edges
    g.remove_edges_from(nx.selfloop_edges(g))
    # stub collapse loses a few edges; wire isolated/low nodes back in
    while g.number_of_edges() < TARGET_EDGES:
        degs = dict(g.degree())
        low = [v for v, d in degs.items() if d <= 1]
        u = int(rng.choice(low)) if low else int(rng.integers(0, N))
        v = int(rng.integers(0, N))
        if u != v and not g.has_edge(u, v):
            g.add_edge(u, v)
    while g.number_of_edges() > TARGET_EDGES:
        edges = list(g.edges())
        g.remove_edge(*edges[rng.integers(0, len(edges))])

    # relabel so hub ids are scattered, not the low integers
    perm = rng.permutation(N)
    g = nx.relabel_nodes(g, {v: int(perm[v]) for v in range(N)})
    hubs = {int(perm[i]) for i in range(len(HUB_DEGREES))}

    # orient: regulator hubs point outward, other edges get random direction
    arcs: list[tuple[int, int]] = []
    for u, v in g.edges():
        if u in hubs and v not in hubs:
            arcs.append((u, v))
        elif v in hubs and u not in hubs:
            arcs.append((v, u))
        elif rng.random() < 0.5:
            arcs.append((u, v))
        else:
            arcs.append((v, u))

    # raw-file noise: self-loops, duplicates, reciprocal arcs
    for h in sorted(hubs)[:8]:
        arcs.append((h, h))
    for k in rng.integers(0, len(arcs), size=12).tolist():
        arcs.append(arcs[k])
    for i, j in arcs[:10]:
        if i != j:
            arcs.append((j, i))

    order = rng.permutation(len(arcs))
    arcs = [arcs[k] for k in order]
    lines = ["# Synthetic transcriptional-regulation-style network (NOT real data).",
             "# Directed arc list with self-loops and duplicate arcs; preprocess with",
             "# the undirected/no-loops mode to obtain 418 nodes and 519 edges.",
             f"# Generator: tools/make_ecoli_surrogate.py, seed {SEED}.",
             f"n {N}"]
    lines += [f"{i} {j}" for i, j in arcs]
    text = "\n".join(lines) + "\n"
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(text)

    deg = np.zeros(N, dtype=int)
    for i, j in g.edges():
        deg[i] += 1
        deg[j] += 1
    hist = np.bincount(deg)
    print(f"wrote {OUT}")
    print(f"arcs in file: {len(arcs)}, undirected edges: {g.number_of_edges()}")
    print(f"sha256: {hashlib.sha256(text.encode()).hexdigest()}")
    print("degree histogram:", dict(enumerate(hist.tolist())))
    print("max degree:", deg.max(), " isolated:", int((deg == 0).sum()))


if __name__ == "__main__":
    main()
