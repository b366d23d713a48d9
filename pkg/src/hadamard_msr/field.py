"""Arithmetic in a prime field F_q with explicit operation accounting.

Symbols are canonical ints in [0, q).  The accounting convention used across
the package: every add or subtract of two symbols costs one addition; a
multiplication is free when an operand is 0, 1, or q-1 (scaling by zero, one,
or minus one is bookkeeping, not work).  The vector helpers judge freeness on
the constant operand only, so measured costs are a property of the code, not
of the data flowing through it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PHASES = ("download", "cancel", "recover", "other")


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for f in (2, 3):
        if n % f == 0:
            return n == f
    f = 5
    while f * f <= n:
        if n % f == 0 or n % (f + 2) == 0:
            return False
        f += 6
    return True


@dataclass
class OpCounter:
    """Monotone addition/multiplication totals for one phase of a computation."""

    phase: str = "other"
    adds: int = 0
    muls: int = 0

    def __post_init__(self):
        if self.phase not in PHASES:
            raise ValueError(f"unknown phase {self.phase!r}")

    def merge(self, other: OpCounter) -> OpCounter:
        phase = self.phase if self.phase == other.phase else "other"
        return OpCounter(phase, self.adds + other.adds, self.muls + other.muls)

    @property
    def total(self) -> int:
        return self.adds + self.muls


@lru_cache(maxsize=None)
def _inverse_table(q: int) -> np.ndarray:
    table = np.zeros(q, dtype=np.int64)
    table[1:] = [pow(v, q - 2, q) for v in range(1, q)]
    table.flags.writeable = False
    return table


@dataclass(frozen=True)
class PrimeField:
    """F_q for an odd prime q, 7 <= q < 2**15 so symbols fit 16-bit storage."""

    q: int

    def __post_init__(self):
        if not is_prime(self.q) or self.q < 7:
            raise ValueError(f"modulus must be an odd prime >= 7, got {self.q}")
        if self.q >= 1 << 15:
            raise ValueError(f"modulus must be below 2**15, got {self.q}")

    # scalar operations ------------------------------------------------

    def add(self, x: int, y: int, counter: OpCounter | None = None) -> int:
        if counter is not None:
            counter.adds += 1
        return (x + y) % self.q

    def sub(self, x: int, y: int, counter: OpCounter | None = None) -> int:
        # a subtraction is one addition; the negation itself is free
        if counter is not None:
            counter.adds += 1
        return (x - y) % self.q

    def mul(self, x: int, y: int, counter: OpCounter | None = None) -> int:
        if counter is not None and not (self.is_free(x) or self.is_free(y)):
            counter.muls += 1
        return (x * y) % self.q

    def neg(self, x: int) -> int:
        return (-x) % self.q

    def inv(self, x: int) -> int:
        x %= self.q
        if x == 0:
            raise ZeroDivisionError("division by zero")
        return pow(x, self.q - 2, self.q)

    def is_free(self, x: int) -> bool:
        """True when multiplying by x costs nothing (x is 0, 1, or q-1)."""
        x %= self.q
        return x == 0 or x == 1 or x == self.q - 1

    # vector operations, counted in bulk -------------------------------

    def free_mask(self, consts) -> np.ndarray:
        c = np.asarray(consts, dtype=np.int64) % self.q
        return (c == 0) | (c == 1) | (c == self.q - 1)

    def vec_add(self, x, y, counter: OpCounter | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if counter is not None:
            counter.adds += int(x.size)
        return (x + np.asarray(y, dtype=np.int64)) % self.q

    def vec_sub(self, x, y, counter: OpCounter | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if counter is not None:
            counter.adds += int(x.size)
        return (x - np.asarray(y, dtype=np.int64)) % self.q

    def diag_mul(self, consts, x, counter: OpCounter | None = None) -> np.ndarray:
        """Entrywise product with plan constants; 0, 1, q-1 constants multiply free."""
        consts = np.asarray(consts, dtype=np.int64)
        if counter is not None:
            counter.muls += int(np.count_nonzero(~self.free_mask(consts)))
        return (consts * np.asarray(x, dtype=np.int64)) % self.q

    def mat_vec(self, matrix, x, counter: OpCounter | None = None) -> np.ndarray:
        """Dense matrix @ x.  Zero entries contribute no work, each row sums
        its nonzero terms with nnz-1 additions, and 0, 1, q-1 entries multiply
        free."""
        m = np.asarray(matrix, dtype=np.int64)
        if counter is not None:
            nnz = np.count_nonzero(m, axis=1)
            counter.adds += int(np.maximum(nnz - 1, 0).sum())
            counter.muls += int(np.count_nonzero(~self.free_mask(m)))
        return (m @ np.asarray(x, dtype=np.int64)) % self.q

    # uncounted linear algebra (plan construction and verification) ----

    def inv_vec(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.int64) % self.q
        if np.any(values == 0):
            raise ZeroDivisionError("division by zero")
        return _inverse_table(self.q)[values]

    def rank(self, matrix) -> int:
        a = np.array(matrix, dtype=np.int64) % self.q
        if a.ndim != 2:
            raise ValueError("rank needs a 2-d matrix")
        rows, cols = a.shape
        r = 0
        for c in range(cols):
            if r == rows:
                break
            pivots = np.nonzero(a[r:, c])[0]
            if pivots.size == 0:
                continue
            p = r + int(pivots[0])
            if p != r:
                a[[r, p]] = a[[p, r]]
            a[r] = a[r] * self.inv(int(a[r, c])) % self.q
            below = np.nonzero(a[r + 1 :, c])[0] + r + 1
            if below.size:
                a[below] = (a[below] - a[below, c : c + 1] * a[r]) % self.q
            r += 1
        return r

    def inv_matrix(self, matrix) -> np.ndarray:
        a = np.array(matrix, dtype=np.int64) % self.q
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("inverse needs a square matrix")
        n = a.shape[0]
        aug = np.concatenate([a, np.eye(n, dtype=np.int64)], axis=1)
        for c in range(n):
            pivots = np.nonzero(aug[c:, c])[0]
            if pivots.size == 0:
                raise ValueError("matrix is singular")
            p = c + int(pivots[0])
            if p != c:
                aug[[c, p]] = aug[[p, c]]
            aug[c] = aug[c] * self.inv(int(aug[c, c])) % self.q
            others = np.nonzero(aug[:, c])[0]
            others = others[others != c]
            if others.size:
                aug[others] = (aug[others] - aug[others, c : c + 1] * aug[c]) % self.q
        return aug[:, n:]
