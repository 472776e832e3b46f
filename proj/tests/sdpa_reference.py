#!/usr/bin/env python3
"""Solve SDPA sparse files with an independent solver and compare against qcrelax.

  sdpa_reference.py solve FILE            print the optimum of max <F0,Y> s.t. <Fi,Y> = c_i, Y >= 0
  sdpa_reference.py check CLI DATA_DIR    export regression problems through the CLI and compare
"""
import json
import math
import os
import subprocess
import sys
import tempfile

import cvxpy as cp
import numpy as np


def read_sdpa(path):
    tokens = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line[0] in '"*':
                continue
            tokens.extend(line.replace(",", " ").replace("{", " ").replace("}", " ").replace("(", " ").replace(")", " ").split())
    pos = 0
    m = int(tokens[pos]); pos += 1
    nblocks = int(tokens[pos]); pos += 1
    sizes = [int(float(t)) for t in tokens[pos:pos + nblocks]]; pos += nblocks
    c = np.array([float(t) for t in tokens[pos:pos + m]]); pos += m
    mats = [[np.zeros((abs(s), abs(s))) for s in sizes] for _ in range(m + 1)]
    while pos + 5 <= len(tokens):
        k, blk, i, j = (int(t) for t in tokens[pos:pos + 4])
        v = float(tokens[pos + 4])
        pos += 5
        M = mats[k][blk - 1]
        M[i - 1, j - 1] = v
        M[j - 1, i - 1] = v
    return sizes, c, mats


def solve_sdpa(path):
    sizes, c, mats = read_sdpa(path)
    Y = []
    cons = []
    for s in sizes:
        if s > 0:
            V = cp.Variable((s, s), symmetric=True)
            cons.append(V >> 0)
        else:
            V = cp.Variable(-s, nonneg=True)
        Y.append(V)

    def inner(k):
        terms = []
        for b, s in enumerate(sizes):
            M = mats[k][b]
            if not M.any():
                continue
            terms.append(cp.trace(M @ Y[b]) if s > 0 else np.diag(M) @ Y[b])
        return cp.sum(cp.hstack(terms)) if terms else cp.Constant(0.0)

    cons += [inner(i + 1) == c[i] for i in range(len(c))]
    prob = cp.Problem(cp.Maximize(inner(0)), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"reference solver status {prob.status} on {path}")
    return prob.value


# (problem file, extra CLI arguments, expected problem value or None)
REGRESSION = [
    ("theta_c5.json", [], math.sqrt(5)),
    ("chsh.json", ["--level", "1"], 2 * math.sqrt(2)),
    ("i3322.json", ["--level", "2"], 1.2509397),
    ("lasserre.json", [], -math.sqrt(6)),
    ("ncpop.json", [], 2.0),
    ("negativity.json", [], 2.0),
    ("ppt_werner.json", [], None),
    ("steering_werner.json", [], None),
    ("tsirelson_lhv.json", [], None),
    ("rac_nv.json", ["--seed", "1"], None),
    ("dps_werner.json", [], None),
]

# Reference values are accurate to about 1e-8; the comparison is pinned at 1e-6 relative.
TOL = 1e-6


def check(cli, data):
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        for name, extra, expected in REGRESSION:
            sdpa = os.path.join(tmp, name + ".dat-s")
            report = os.path.join(tmp, name + ".report.json")
            args = [cli, "run", os.path.join(data, name), "--export", sdpa, "--json-report", report] + extra
            if name == "rac_nv.json":
                # single rank profile so that one SDP is solved and exported
                spec = json.load(open(os.path.join(data, name)))
                spec["ranks"] = [[1, 1], [1, 1]]
                path = os.path.join(tmp, "rac_nv_profile.json")
                json.dump(spec, open(path, "w"))
                args[2] = path
            proc = subprocess.run(args, capture_output=True, text=True)
            if proc.returncode not in (0, 2):
                print(f"FAIL {name}: CLI exit {proc.returncode}: {proc.stderr.strip()}")
                failures += 1
                continue
            rep = json.load(open(report))
            ours = rep["export"]["objective"]
            ref = solve_sdpa(sdpa)
            ok = abs(ours - ref) <= TOL * max(1.0, abs(ref))
            line = f"{'PASS' if ok else 'FAIL'} {name}: internal {ours:.10f} reference {ref:.10f}"
            if expected is not None:
                good = abs(rep["value"] - expected) <= 1e-6 * max(1.0, abs(expected))
                ok = ok and good
                line += f" value {rep['value']:.10f} expected {expected:.10f}"
            print(line)
            failures += 0 if ok else 1
    return failures


def main():
    if len(sys.argv) == 3 and sys.argv[1] == "solve":
        print(f"{solve_sdpa(sys.argv[2]):.12f}")
        return 0
    if len(sys.argv) == 4 and sys.argv[1] == "check":
        return 1 if check(sys.argv[2], sys.argv[3]) else 0
    print(__doc__, file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
