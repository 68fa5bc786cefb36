#!/usr/bin/env python3
"""Build the bundled curve samples under data/.

Curves with conductor < 500,000 come from Cremona's tables as shipped in
PARI's elldata package (coefficients plus Mordell-Weil generators). The
large-conductor sample is found by random search over small Weierstrass
coefficients, keeping curves of prime conductor in (500000, 3e8].

Every invariant is recomputed with PARI/GP:
  torsion, Tamagawa product   elltors, ellglobalred
  real period                 ellbsd(E) * tors^2 / prod c_p
  regulator                   det of the height pairing on the generators
  special value               L^(r)(E,1)/r! from ellanalyticrank
  sha                         rounded analytic order of Sha

Requirements: cypari2 and passagemath-pari-elldata (pip).
Usage: build_samples.py OUT_DIR [--scan N] [--seed S]
"""
import argparse
import csv
import math
import os
import random
import sys
import time

import cypari2

pari = cypari2.Pari()
pari.allocatemem(1_500_000_000, silent=True)
pari.set_real_precision(38)

PRIMES = [int(p) for p in pari.primes(100)]
HEADER = ["label", "conductor", "rank", "torsion_order", "real_period", "regulator",
          "tamagawa_product", "special_value", "sha_order"]
AP_HEADER = [f"ap_{p}" for p in PRIMES]


def elldata_dir():
    if "ELLDATA_DIR" in os.environ:
        return os.environ["ELLDATA_DIR"]
    import sage_wheels
    base = list(sage_wheels.__path__)[0]
    return os.path.join(base, "share", "pari", "elldata")


def fmt(x):
    return repr(float(x))


def invariants(label, ainvs, gens, with_ap):
    E = pari.ellinit(ainvs)
    r = len(gens)
    an = pari.ellanalyticrank(E)
    if int(an[0]) != r:
        return None
    tors = int(pari.elltors(E)[0])
    gr = pari.ellglobalred(E)
    cond = int(gr[0])
    cp = int(gr[2])
    omega = pari.ellbsd(E) * tors * tors / cp
    reg = pari.matdet(pari.ellheightmatrix(E, gens)) if r > 0 else pari(1)
    lstar = an[1] / pari.factorial(r)
    sha_real = lstar * tors * tors / (omega * reg * cp)
    sha = round(float(sha_real))
    if sha < 1 or abs(float(sha_real) - sha) > 1e-6 * sha:
        return None
    root = math.isqrt(sha)
    if root * root != sha:
        return None
    row = [label, cond, r, tors, fmt(omega), fmt(reg), cp, fmt(lstar), sha]
    if with_ap:
        row += [int(pari.ellap(E, p)) for p in PRIMES]
    return row


def load_cremona(selected):
    """Yield (label, ainvs, gens) for the selected global curve indices."""
    d = elldata_dir()
    idx = 0
    want = sorted(selected)
    k = 0
    for f in range(500):
        path = os.path.join(d, f"ell{f}")
        if not os.path.exists(path):
            continue
        v = pari(open(path).read())
        for cond in v:
            for c in list(cond)[1:]:
                if k < len(want) and want[k] == idx:
                    yield str(c[0]), c[1], c[2]
                    k += 1
                idx += 1


def count_cremona():
    d = elldata_dir()
    n = 0
    for f in range(500):
        path = os.path.join(d, f"ell{f}")
        if os.path.exists(path):
            v = pari(open(path).read())
            n += sum(len(cond) - 1 for cond in v)
    return n


def write(path, rows, with_ap):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER + (AP_HEADER if with_ap else []))
        w.writerows(rows)
    print(f"wrote {path}: {len(rows)} rows", file=sys.stderr)


def balanced(rows, classes, rng, cap):
    by = {c: [r for r in rows if r[8] == c] for c in classes}
    m = min(cap, *(len(v) for v in by.values()))
    out = []
    for c in classes:
        out += rng.sample(by[c], m)
    out.sort(key=lambda r: (r[1], r[0]))
    return out


def large_conductor(n_target, rng):
    rows = []
    seen = set()
    tries = 0
    while len(rows) < n_target:
        tries += 1
        a1, a3 = rng.randint(0, 1), rng.randint(0, 1)
        a2 = rng.randint(-1, 1)
        a4 = rng.randint(-400, 400)
        a6 = rng.randint(-4000, 4000)
        try:
            E = pari.ellinit([a1, a2, a3, a4, a6])
        except cypari2.PariError:
            continue
        if int(pari.length(E)) == 0:
            continue
        N = int(pari.ellglobalred(E)[0])
        if not (500_000 < N <= 300_000_000) or not pari.isprime(N):
            continue
        Em = pari.ellminimalmodel(E)
        ainvs = [int(x) for x in list(Em)[:5]]
        if tuple(ainvs) in seen:
            continue
        an = pari.ellanalyticrank(Em)
        r = int(an[0])
        gens = []
        if r > 0:
            rk = pari.ellrank(Em)
            if int(rk[0]) != r or int(rk[1]) != r:
                continue
            gens = pari.ellsaturation(Em, rk[3], 200)
        label = f"{N}.s{len(rows) + 1}"
        row = invariants(label, ainvs, gens, False)
        if row is None:
            continue
        seen.add(tuple(ainvs))
        rows.append(row)
    print(f"large conductor: {len(rows)} rows after {tries} draws", file=sys.stderr)
    rows.sort(key=lambda r: (r[1], r[0]))
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--scan", type=int, default=120_000)
    ap.add_argument("--seed", type=int, default=20240917)
    ap.add_argument("--large", type=int, default=3000)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    os.makedirs(args.out, exist_ok=True)

    total = count_cremona()
    print(f"cremona curves: {total}", file=sys.stderr)
    picks = rng.sample(range(total), args.scan)
    t0 = time.time()
    pool = []
    skipped = 0
    for i, (label, ainvs, gens) in enumerate(load_cremona(picks)):
        row = invariants(label, ainvs, gens, True)
        if row is None:
            skipped += 1
        else:
            pool.append(row)
        if i % 10_000 == 0:
            print(f"  {i} scanned, {time.time() - t0:.0f}s", file=sys.stderr)
    print(f"pool {len(pool)}, skipped {skipped}", file=sys.stderr)

    shuffled = pool[:]
    rng.shuffle(shuffled)
    regression = sorted(shuffled[:12_000], key=lambda r: (r[1], r[0]))
    write(os.path.join(args.out, "lmfdb_sample_regression.csv"), [r[:9] for r in regression], False)

    s49 = balanced(pool, [4, 9], rng, 1500)
    write(os.path.join(args.out, "lmfdb_sample_4_9.csv"), s49, True)

    posrank = [r for r in pool if r[2] > 0]
    s14 = balanced(posrank, [1, 4], rng, 1500)
    write(os.path.join(args.out, "lmfdb_sample_1_4_posrank.csv"), [r[:9] for r in s14], False)

    large = large_conductor(args.large, rng)
    write(os.path.join(args.out, "large_conductor_sample.csv"), large, False)


if __name__ == "__main__":
    main()
