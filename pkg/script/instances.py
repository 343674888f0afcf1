"""Seeded test LPs: small random standard-form problems and an ill-conditioned
corpus whose double-precision rounding collapses a row pair."""

from fractions import Fraction
from pathlib import Path
import random
from typing import List, Optional

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from mps import write_mps
from rational import RationalLP, SparseRationalMatrix
from standard_form import general_from_standard
from utils import LogLevel, log

ILL_EXPONENTS = tuple(range(56, 65))
ILL_CORPUS_SIZE = 10
MAX_HILBERT_ORDER = 8
RANDOM_MAX_ROWS = 6
RANDOM_MAX_COLUMNS = 10


def _random_rational(rng: random.Random, bound: int) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def random_standard_lp(seed: int, m: int, n: int, bound: int = 99, density: float = 0.7,
                       name: Optional[str] = None) -> RationalLP:
    """min c^T x, A x = b, x >= 0 with numerators and denominators up to `bound`.

    Roughly a third of the instances get b = A x0 for a random x0 >= 0, which
    makes them feasible; the rest keep a random b.
    """
    rng = random.Random(seed)
    columns = []
    for _ in range(n):
        col = {i: _random_rational(rng, bound) for i in range(m) if rng.random() < density}
        columns.append(col)
    A = SparseRationalMatrix.from_columns(m, columns)
    if rng.random() < 1 / 3:
        x0 = [Fraction(rng.randint(0, bound), rng.randint(1, bound)) for _ in range(n)]
        b = A.matvec(x0)
    else:
        b = [_random_rational(rng, bound) for _ in range(m)]
    c = [_random_rational(rng, bound) for _ in range(n)]
    return RationalLP(A, b, c, [Fraction(0)] * n, name or f"random_s{seed}_{m}x{n}")


def hilbert_lp(k: int, e: int) -> RationalLP:
    """Order-k Hilbert block next to a 2x2 block [[1, 1], [M, M(1 + 2^-e)]].

    With M = 2^(e - 20) the second row rounds to M times the first in double
    precision once e > 53, so only boosted precisions see a regular system.
    Every constraint holds at the all-ones vector, which is the only feasible
    point.
    """
    if not 1 <= k <= MAX_HILBERT_ORDER:
        raise ValueError(f"Hilbert order must be in 1..{MAX_HILBERT_ORDER}, got {k}")
    if e <= 53:
        raise ValueError(f"exponent {e} is resolved by double precision")
    eps = Fraction(1, 2 ** e)
    big = Fraction(2 ** (e - 20))
    rows = [[Fraction(1), Fraction(1)] + [Fraction(0)] * k,
            [big, big * (1 + eps)] + [Fraction(0)] * k]
    for i in range(k):
        rows.append([Fraction(0), Fraction(0)] + [Fraction(1, i + j + 1) for j in range(k)])
    b = [sum(row, Fraction(0)) for row in rows]
    c = [Fraction(1)] * (k + 2)
    return RationalLP.from_dense(rows, b, c, name=f"hilbert{k}_e{e}")


def random_corpus(count: int, seed: int = 0) -> List[RationalLP]:
    """`count` random LPs with 1..6 rows and 1..10 columns, reproducible from `seed`."""
    rng = random.Random(seed)
    return [random_standard_lp(seed * 100003 + i, rng.randint(1, RANDOM_MAX_ROWS),
                               rng.randint(1, RANDOM_MAX_COLUMNS))
            for i in range(count)]


def ill_conditioned_corpus(count: int = ILL_CORPUS_SIZE) -> List[RationalLP]:
    return [hilbert_lp(1 + i % MAX_HILBERT_ORDER, ILL_EXPONENTS[i % len(ILL_EXPONENTS)])
            for i in range(count)]


def write_corpus(directory: str, kind: str = "both", count: int = ILL_CORPUS_SIZE, seed: int = 0,
                 log_file: Optional[str] = None) -> List[Path]:
    """Write generated instances as free-format MPS files and return their paths."""
    if kind not in ("random", "ill", "both"):
        raise ValueError(f"unknown corpus kind {kind!r}")
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    lps: List[RationalLP] = []
    if kind in ("random", "both"):
        lps.extend(random_corpus(count, seed))
    if kind in ("ill", "both"):
        lps.extend(ill_conditioned_corpus(count))
    paths = []
    for lp in lps:
        path = target / f"{lp.name}.mps"
        path.write_text(write_mps(general_from_standard(lp)), encoding="utf-8")
        paths.append(path)
    log(f"Wrote {len(paths)} instances to {target}", log_file, LogLevel.INFO)
    return paths
