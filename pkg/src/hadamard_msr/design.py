"""Sign-vector combinatorics and fast transforms on length-2**(k+1) blocks.

The coding matrices of the codec are diagonal, built from sign vectors x_i
whose j-th entry is (-1)**floor(j / 2**i).  Two index relations drive the
repair schemes: shifting an index by 2**l flips the sign of x_i exactly when
i = l (lemma1_relation), and the mirrored partner N-1-j-(-1)**j flips every
x_i except x_0 (lemma2_partner).  The Sylvester-Hadamard matrix and its fast
butterfly transform tie the standard basis to the alternative helper basis.
"""

from __future__ import annotations

import numpy as np

from .field import OpCounter


def sign_vector(i: int, k: int) -> np.ndarray:
    """Entries (-1)**floor(j / 2**i) for j in [0, 2**(k+1)), as +-1 ints."""
    if not 0 <= i <= k:
        raise ValueError(f"sign vector index {i} out of range for k={k}")
    j = np.arange(1 << (k + 1), dtype=np.int64)
    return 1 - 2 * ((j >> i) & 1)


def lemma1_relation(i: int, l: int, j: int, k: int) -> str:
    """Relation between sign_vector(i, k)[j] and entry j + 2**l.

    Valid for j = mu * 2**(l+1) + nu with 0 <= mu < 2**(k-l) and
    0 <= nu < 2**l (so the shifted index stays in range and bit l of j is
    zero).  Returns "negated" when i = l, else "equal".
    """
    for name, v in (("i", i), ("l", l)):
        if not 0 <= v <= k:
            raise ValueError(f"{name}={v} out of range for k={k}")
    n = 1 << (k + 1)
    nu = j & ((1 << l) - 1)
    mu = j >> (l + 1)
    if not (0 <= mu < 1 << (k - l)) or mu * (1 << (l + 1)) + nu != j:
        raise ValueError(f"index {j} is not of the form mu*2**{l + 1}+nu")
    if j + (1 << l) >= n:
        raise ValueError(f"shifted index {j + (1 << l)} out of range")
    return "negated" if i == l else "equal"


def lemma2_partner(j: int, n: int) -> int:
    """Partner n-1-j-(-1)**j of an index j < n/2.

    The pairing satisfies sign_vector(0)[partner] = sign_vector(0)[j] and
    sign_vector(i)[partner] = -sign_vector(i)[j] for every i >= 1.
    """
    if not 0 <= j < n // 2:
        raise ValueError(f"partner defined for indices below {n // 2}, got {j}")
    return n - 1 - j - (1 if j % 2 == 0 else -1)


def sylvester(k: int) -> np.ndarray:
    """Sylvester-Hadamard matrix of order 2**k, entries +-1."""
    if k < 1:
        raise ValueError("order exponent must be at least 1")
    h = np.ones((1, 1), dtype=np.int64)
    for _ in range(k):
        h = np.block([[h, h], [h, -h]])
    return h


def fast_hadamard_apply(
    z, q: int | None = None, counter: OpCounter | None = None
) -> np.ndarray:
    """Sylvester-Hadamard transform via in-place butterflies.

    A length n = 2**m input costs exactly m*n counted additions: n per
    butterfly level, each output being one add or subtract of two values.
    Reduces mod q when a modulus is given, else works over the integers.
    """
    out = np.array(z, dtype=np.int64)
    n = out.size
    if n == 0 or n & (n - 1):
        raise ValueError(f"transform length must be a power of two, got {n}")
    h = 1
    while h < n:
        blocks = out.reshape(-1, 2 * h)
        a = blocks[:, :h].copy()
        b = blocks[:, h:].copy()
        blocks[:, :h] = a + b
        blocks[:, h:] = a - b
        if counter is not None:
            counter.adds += n
        if q is not None:
            out %= q
        h *= 2
    if q is not None:
        out %= q
    return out


def half_hadamard_apply(
    z, sign: int, q: int | None = None, counter: OpCounter | None = None
) -> np.ndarray:
    """Product of the half-height block matrix (H | sign*H) with z.

    H is the Sylvester matrix of order n/2 for an input of length n = 2**m.
    Computed as two full transforms plus one signed combine, which costs
    m*2**m - 2**(m-1) counted additions in total.
    """
    z = np.asarray(z, dtype=np.int64)
    n = z.size
    if n < 2 or n & (n - 1):
        raise ValueError(f"input length must be a power of two >= 2, got {n}")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    half = n // 2
    top = fast_hadamard_apply(z[:half], q, counter)
    bottom = fast_hadamard_apply(z[half:], q, counter)
    if counter is not None:
        counter.adds += half
    out = top + sign * bottom
    return out % q if q is not None else out
