"""Dedupe srg_search output up to isomorphism and write graph6 lines.

usage: python3 srg_dedupe.py OUT.g6 < matrices.txt   (needs networkx, pynauty)
"""
import sys

import networkx as nx
import numpy as np
import pynauty

n = 25
seen = {}
for line in sys.stdin:
    line = line.strip()
    if len(line) != n * n:
        continue
    a = np.array([int(c) for c in line]).reshape(n, n)
    sq = a @ a
    assert (a == a.T).all() and (a.sum(1) == 12).all()
    assert all(sq[i, j] == (5 if a[i, j] else 6) for i in range(n) for j in range(n) if i != j)
    g = pynauty.Graph(n, adjacency_dict={i: list(np.flatnonzero(a[i])) for i in range(n)})
    seen.setdefault(pynauty.certificate(g), a)

lines = sorted(nx.to_graph6_bytes(nx.from_numpy_array(a), header=False).decode().strip() for a in seen.values())
with open(sys.argv[1], "w") as f:
    f.write("\n".join(lines) + "\n")
print(len(lines), "graphs")
