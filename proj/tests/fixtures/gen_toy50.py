#!/usr/bin/env python3
# Copyright 2026 The OHWEU Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes toy50.json: a 50-point database, 12 queries and fixed W, b, P, R,
with mAP for both query modes computed here in exact rational arithmetic.

All matrix entries are multiples of 1/4 so every dot product is exact in
double precision too.
"""

import json
import random
from fractions import Fraction
from pathlib import Path

D, K, C = 6, 8, 5
N_DB, N_Q = 50, 12


def quarter(rng, lo=-8, hi=8):
    return Fraction(rng.randint(lo, hi), 4)


def sgn(v):
    return 1 if v >= 0 else -1


def main():
    rng = random.Random(20260101)
    W = [[quarter(rng) for _ in range(K)] for _ in range(D)]  # D x K
    b = [quarter(rng) for _ in range(K)]
    P = [[quarter(rng) for _ in range(K)] for _ in range(K)]  # K x K
    R = [[quarter(rng) for _ in range(K)] for _ in range(D)]  # D x K

    centroids = [[rng.randint(-8, 8) for _ in range(D)] for _ in range(C - 1)]

    def point(classes):
        x = [Fraction(0)] * D
        for c in classes:
            x = [a + centroids[c][j] for j, a in enumerate(x)]
        return [a / len(classes) + quarter(rng, -6, 6) for a in x]

    def labels():
        # Class C-1 never appears in the database.
        k = 1 if rng.random() < 0.7 else 2
        return sorted(rng.sample(range(C - 1), k))

    db_y = [labels() for _ in range(N_DB)]
    db_x = [point(y) for y in db_y]
    q_y = [labels() for _ in range(N_Q - 1)] + [[C - 1]]
    q_x = [point(y) if y != [C - 1] else [quarter(rng) for _ in range(D)] for y in q_y]

    def encode(x):
        return [sgn(sum(W[d][k] * x[d] for d in range(D)) + b[k]) for k in range(K)]

    def project(M, v):
        return [sgn(sum(M[i][k] * v[i] for i in range(len(v)))) for k in range(K)]

    db_g = [project(P, encode(x)) for x in db_x]

    def mean_ap(query_codes):
        aps = []
        for qc, y in zip(query_codes, q_y):
            rel = [bool(set(y) & set(z)) for z in db_y]
            if not any(rel):
                continue
            dist = [sum(a != c for a, c in zip(qc, g)) for g in db_g]
            order = sorted(range(N_DB), key=lambda i: (dist[i], i))
            hits, s = 0, Fraction(0)
            for r, i in enumerate(order, start=1):
                if rel[i]:
                    hits += 1
                    s += Fraction(hits, r)
            aps.append(s / sum(rel))
        return sum(aps) / len(aps), len(q_y) - len(aps)

    sym, skipped = mean_ap([project(P, encode(x)) for x in q_x])
    asym, _ = mean_ap([project(R, x) for x in q_x])

    def f(m):
        return [[float(v) for v in row] for row in m]

    out = {
        "dim": D,
        "bits": K,
        "classes": C,
        "W": f(W),
        "b": [float(v) for v in b],
        "P": f(P),
        "R": f(R),
        "db_features": f(db_x),
        "db_labels": db_y,
        "query_features": f(q_x),
        "query_labels": q_y,
        "expected_map_sym": float(sym),
        "expected_map_asym": float(asym),
        "expected_skipped": skipped,
    }
    path = Path(__file__).with_name("toy50.json")
    path.write_text(json.dumps(out, indent=1) + "\n")
    print(f"sym={float(sym):.12f} asym={float(asym):.12f} skipped={skipped}")


if __name__ == "__main__":
    main()
