#!/usr/bin/env python3
"""Generate a (3,6)-regular LDPC parity-check matrix in alist format.

Progressive edge growth: each variable is wired one edge at a time to the
check currently farthest from it in the Tanner graph (preferring checks not
yet reachable, then lowest degree). For the sizes used here this yields
girth >= 6, which the script verifies before writing anything.

Usage: gen_regular_alist.py --n 204 --seed 1 --out ldpc_204_102.alist
"""

import argparse
import random
import sys
from collections import deque

VAR_DEG = 3
CHK_DEG = 6


def check_distances(v, var_nbrs, chk_nbrs, m):
    """BFS distance (in edges) from variable v to every check; None if unreachable."""
    dist = [None] * m
    seen_vars = {v}
    frontier_vars = [v]
    d = 1
    while frontier_vars:
        frontier_chks = []
        for u in frontier_vars:
            for c in var_nbrs[u]:
                if dist[c] is None:
                    dist[c] = d
                    frontier_chks.append(c)
        frontier_vars = []
        for c in frontier_chks:
            for u in chk_nbrs[c]:
                if u not in seen_vars:
                    seen_vars.add(u)
                    frontier_vars.append(u)
        d += 2
    return dist


def peg(n, seed):
    if n * VAR_DEG % CHK_DEG != 0:
        sys.exit(f"n = {n} does not give an integer number of checks")
    m = n * VAR_DEG // CHK_DEG
    rng = random.Random(seed)
    var_nbrs = [[] for _ in range(n)]
    chk_nbrs = [[] for _ in range(m)]
    for v in range(n):
        for _ in range(VAR_DEG):
            dist = check_distances(v, var_nbrs, chk_nbrs, m)
            best_key = None
            candidates = []
            for c in range(m):
                if c in var_nbrs[v] or len(chk_nbrs[c]) >= CHK_DEG:
                    continue
                far = dist[c] if dist[c] is not None else float("inf")
                key = (far, -len(chk_nbrs[c]))
                if best_key is None or key > best_key:
                    best_key = key
                    candidates = [c]
                elif key == best_key:
                    candidates.append(c)
            if not candidates:
                sys.exit("ran out of check sockets; bad degree arithmetic")
            c = rng.choice(candidates)
            var_nbrs[v].append(c)
            chk_nbrs[c].append(v)
    return var_nbrs, chk_nbrs


def verify(var_nbrs, chk_nbrs):
    for v, cs in enumerate(var_nbrs):
        if len(cs) != VAR_DEG or len(set(cs)) != VAR_DEG:
            sys.exit(f"variable {v} has degree {len(cs)}")
    for c, vs in enumerate(chk_nbrs):
        if len(vs) != CHK_DEG or len(set(vs)) != CHK_DEG:
            sys.exit(f"check {c} has degree {len(vs)}")
    supports = [set(vs) for vs in chk_nbrs]
    for a in range(len(supports)):
        for b in range(a + 1, len(supports)):
            if len(supports[a] & supports[b]) > 1:
                sys.exit(f"checks {a} and {b} share two variables (4-cycle)")


def to_alist(var_nbrs, chk_nbrs):
    n, m = len(var_nbrs), len(chk_nbrs)
    lines = [f"{n} {m}", f"{VAR_DEG} {CHK_DEG}"]
    lines.append(" ".join(str(VAR_DEG) for _ in range(n)))
    lines.append(" ".join(str(CHK_DEG) for _ in range(m)))
    for cs in var_nbrs:
        lines.append(" ".join(str(c + 1) for c in sorted(cs)))
    for vs in chk_nbrs:
        lines.append(" ".join(str(v + 1) for v in sorted(vs)))
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, required=True, help="code length (multiple of 2)")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    var_nbrs, chk_nbrs = peg(args.n, args.seed)
    verify(var_nbrs, chk_nbrs)
    with open(args.out, "w") as f:
        f.write(to_alist(var_nbrs, chk_nbrs))
    print(f"wrote {args.out}: n={args.n}, m={len(chk_nbrs)}, girth >= 6")


if __name__ == "__main__":
    main()
