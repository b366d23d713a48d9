"""Code parameters, diagonal coding matrices, encoding, and erasure decoding.

A (k+2, k) code over F_q stores k data parts f_1..f_k of N = 2**(k+1)
symbols each, plus two parities: f_{k+1} = sum f_i and f_{k+2} = sum A_i f_i
with diagonal coding matrices A_i = a_i X_i + b_i X_0 + I.  The coefficient
constraints make every A_i entrywise invertible and every difference
A_i - A_j entrywise nonzero, which is exactly what two-erasure decoding
needs.  Any two node failures are recoverable.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass
from functools import lru_cache

import numpy as np

from .design import sign_vector
from .field import PrimeField, is_prime

# Coefficient sets for the demo profiles, chosen so operation-count reports
# are directly comparable across runs.  Format: k -> (q, a, b).
DEMO_COEFFICIENTS = {
    2: (7, (1, 1), (3, 4)),
    3: (11, (2, 2, 6), (7, 4, 2)),
}


def coefficient_violations(k: int, q: int, a, b) -> list[str]:
    """All constraint violations of a candidate coefficient set, as messages.

    The constraints: a_i, b_i nonzero; a_i**2 - b_i**2 = -1 (mod q); and for
    every i != j and signs s, t in {+1, -1}, s*a_i + t*a_j != +-(b_i - b_j)
    (mod q).  The cross constraint is what keeps A_i - A_j entrywise nonzero.
    """
    problems = []
    a = [int(v) % q for v in a]
    b = [int(v) % q for v in b]
    if len(a) != k or len(b) != k:
        problems.append(f"need {k} coefficients, got {len(a)} a and {len(b)} b")
        return problems
    for i in range(k):
        if a[i] == 0:
            problems.append(f"a_{i + 1} is zero")
        if b[i] == 0:
            problems.append(f"b_{i + 1} is zero")
        if (a[i] * a[i] - b[i] * b[i]) % q != q - 1:
            problems.append(f"a_{i + 1}^2 - b_{i + 1}^2 != -1 (mod {q})")
    for i in range(k):
        for j in range(i + 1, k):
            diff = (b[i] - b[j]) % q
            for s in (1, -1):
                for t in (1, -1):
                    v = (s * a[i] + t * a[j]) % q
                    if v == diff or v == (-diff) % q:
                        problems.append(
                            f"({s:+d})a_{i + 1} + ({t:+d})a_{j + 1} = "
                            f"+-(b_{i + 1} - b_{j + 1}) (mod {q})"
                        )
    return problems


def validate_coefficients(k: int, q: int, a, b) -> bool:
    return not coefficient_violations(k, q, a, b)


@dataclass(frozen=True)
class CodeParams:
    """Immutable parameters of one (k+2, k) code instance.

    Construction validates primality, the q >= 2k+3 range, and the full
    coefficient constraint set unless check=False (used to build broken
    instances on purpose, e.g. for negative rank-condition tests).
    """

    k: int
    q: int
    a: tuple
    b: tuple
    check: InitVar[bool] = True

    def __post_init__(self, check: bool):
        object.__setattr__(self, "a", tuple(int(v) % self.q for v in self.a))
        object.__setattr__(self, "b", tuple(int(v) % self.q for v in self.b))
        if self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")
        PrimeField(self.q)  # primality / oddness / size checks
        if check:
            if self.q < 2 * self.k + 3:
                raise ValueError(f"q={self.q} below 2k+3={2 * self.k + 3}")
            problems = coefficient_violations(self.k, self.q, self.a, self.b)
            if problems:
                raise ValueError("invalid coefficients: " + "; ".join(problems))

    @property
    def n(self) -> int:
        """Symbols per node."""
        return 1 << (self.k + 1)

    @property
    def nodes(self) -> int:
        return self.k + 2

    @property
    def field(self) -> PrimeField:
        return PrimeField(self.q)


def _candidate_pairs(k: int, q: int, prefer_units: bool) -> list[tuple[int, int]]:
    pairs = [
        (ai, bi)
        for ai in range(1, q)
        for bi in range(1, q)
        if (ai * ai - bi * bi) % q == q - 1
    ]
    if prefer_units:
        # Entry values of a_i X_i + b_i X_0 + I are s*a_i + t*b_i + 1 over the
        # four sign combinations; favoring 0/+-1 values there shrinks the
        # multiplication count of the cancel diagonals built from them.
        def richness(pair):
            ai, bi = pair
            free = {0, 1, q - 1}
            return sum(
                (s * ai + t * bi + 1) % q in free for s in (1, -1) for t in (1, -1)
            )

        pairs.sort(key=lambda p: (-richness(p), p))
    return pairs


def find_coefficients(
    k: int, q: int, prefer_units: bool = False
) -> tuple[tuple, tuple] | None:
    """First valid (a, b) assignment in deterministic search order.

    Depth-first over positions 1..k, trying per-position candidate pairs in
    lexicographic (a_i, b_i) order, so the default result is the
    lexicographically smallest valid (a_1, b_1, ..., a_k, b_k).  With
    prefer_units the per-position order instead favors pairs whose coding
    matrix has the most 0/+-1 entries (tie-broken lexicographically).
    Returns None when no assignment exists for this q.
    """
    if not is_prime(q) or q < 2 * k + 3:
        raise ValueError(f"q must be a prime >= 2k+3 = {2 * k + 3}, got {q}")
    pairs = _candidate_pairs(k, q, prefer_units)

    def compatible(p, chosen):
        ai, bi = p
        for aj, bj in chosen:
            diff = (bi - bj) % q
            for s in (1, -1):
                for t in (1, -1):
                    v = (s * ai + t * aj) % q
                    if v == diff or v == (-diff) % q:
                        return False
        return True

    chosen: list[tuple[int, int]] = []

    def extend() -> bool:
        if len(chosen) == k:
            return True
        for p in pairs:
            if compatible(p, chosen):
                chosen.append(p)
                if extend():
                    return True
                chosen.pop()
        return False

    if not extend():
        return None
    return tuple(p[0] for p in chosen), tuple(p[1] for p in chosen)


def search_params(
    k: int, q: int | None = None, prefer_units: bool = False
) -> CodeParams:
    """CodeParams for k, searching coefficients at q or at ascending primes.

    With q given, fails if no valid assignment exists there; otherwise scans
    odd primes upward from 2k+3 until one admits an assignment.
    """
    if q is not None:
        found = find_coefficients(k, q, prefer_units)
        if found is None:
            raise ValueError(f"no valid coefficients exist for k={k}, q={q}")
        return CodeParams(k, q, *found)
    candidate = 2 * k + 3
    while candidate < 1 << 15:
        if is_prime(candidate):
            found = find_coefficients(k, candidate, prefer_units)
            if found is not None:
                return CodeParams(k, candidate, *found)
        candidate += 2
    raise ValueError(f"no usable modulus found for k={k}")


def demo_params(k: int) -> CodeParams:
    if k not in DEMO_COEFFICIENTS:
        raise ValueError(f"no demo profile for k={k} (have {sorted(DEMO_COEFFICIENTS)})")
    q, a, b = DEMO_COEFFICIENTS[k]
    return CodeParams(k, q, a, b)


@lru_cache(maxsize=None)
def _coding_diagonals(params: CodeParams) -> np.ndarray:
    x0 = sign_vector(0, params.k)
    rows = [
        (params.a[i] * sign_vector(i + 1, params.k) + params.b[i] * x0 + 1) % params.q
        for i in range(params.k)
    ]
    out = np.stack(rows)
    out.flags.writeable = False
    return out


def coding_matrix(params: CodeParams, i: int) -> np.ndarray:
    """Diagonal of A_i = a_i X_i + b_i X_0 + I as a length-N vector, 1 <= i <= k."""
    if not 1 <= i <= params.k:
        raise ValueError(f"coding matrix index {i} out of range, k={params.k}")
    return _coding_diagonals(params)[i - 1]


def inverse_coding_matrix(params: CodeParams, i: int) -> np.ndarray:
    """Entrywise inverse diagonal of A_i; errors if any entry is zero."""
    return params.field.inv_vec(coding_matrix(params, i))


def encode(params: CodeParams, parts) -> np.ndarray:
    """Full codeword (k+2, N) from systematic parts (k, N)."""
    parts = np.asarray(parts, dtype=np.int64) % params.q
    if parts.shape != (params.k, params.n):
        raise ValueError(f"parts must have shape {(params.k, params.n)}, got {parts.shape}")
    parity1 = parts.sum(axis=0) % params.q
    parity2 = (_coding_diagonals(params) * parts).sum(axis=0) % params.q
    return np.concatenate([parts, parity1[None, :], parity2[None, :]])


def encode_blocks(params: CodeParams, blocks) -> np.ndarray:
    """Vectorized encode of many chunks: (chunks, k, N) -> (chunks, k+2, N)."""
    blocks = np.asarray(blocks, dtype=np.int64) % params.q
    if blocks.ndim != 3 or blocks.shape[1:] != (params.k, params.n):
        raise ValueError(
            f"blocks must have shape (chunks, {params.k}, {params.n}), got {blocks.shape}"
        )
    chunks = blocks.shape[0]
    out = np.empty((chunks, params.k + 2, params.n), dtype=np.int64)
    out[:, : params.k] = blocks
    out[:, params.k] = blocks.sum(axis=1) % params.q
    out[:, params.k + 1] = (_coding_diagonals(params)[None, :, :] * blocks).sum(axis=1) % params.q
    return out


def decode(params: CodeParams, available: dict) -> np.ndarray:
    """Full codeword from any >= k surviving node vectors.

    `available` maps node ids (1-based; parities are k+1 and k+2) to length-N
    vectors.  Up to two missing nodes are reconstructed: missing parities by
    re-encoding, one missing systematic from either parity, two missing
    systematics by entrywise 2x2 elimination against both parities.
    """
    k, q, n = params.k, params.q, params.n
    if len(available) < k:
        raise ValueError(f"need at least {k} nodes to decode, got {len(available)}")
    data = {}
    for node, vec in available.items():
        if not 1 <= node <= k + 2:
            raise ValueError(f"unknown node id {node}")
        vec = np.asarray(vec, dtype=np.int64) % q
        if vec.shape != (n,):
            raise ValueError(f"node {node} vector must have shape ({n},)")
        data[node] = vec

    missing = [i for i in range(1, k + 1) if i not in data]
    if len(missing) == 1:
        (i,) = missing
        others = [l for l in range(1, k + 1) if l != i]
        if k + 1 in data:
            acc = data[k + 1].copy()
            for l in others:
                acc -= data[l]
            data[i] = acc % q
        elif k + 2 in data:
            acc = data[k + 2].copy()
            for l in others:
                acc -= coding_matrix(params, l) * data[l]
            data[i] = inverse_coding_matrix(params, i) * acc % q
        else:
            raise ValueError("not enough nodes to decode")  # unreachable given len >= k
    elif len(missing) == 2:
        i, j = missing
        if k + 1 not in data or k + 2 not in data:
            raise ValueError("not enough nodes to decode")  # unreachable given len >= k
        rhs1 = data[k + 1].copy()
        rhs2 = data[k + 2].copy()
        for l in range(1, k + 1):
            if l in data:
                rhs1 -= data[l]
                rhs2 -= coding_matrix(params, l) * data[l]
        rhs1 %= q
        rhs2 %= q
        # per-position system [[1, 1], [A_i[t], A_j[t]]]; the cross
        # constraints keep the determinant A_j[t] - A_i[t] nonzero
        ai = coding_matrix(params, i)
        aj = coding_matrix(params, j)
        det_inv = params.field.inv_vec(aj - ai)
        fj = (rhs2 - ai * rhs1) * det_inv % q
        data[j] = fj
        data[i] = (rhs1 - fj) % q

    parts = np.stack([data[i] for i in range(1, k + 1)])
    word = encode(params, parts)
    for node in (k + 1, k + 2):
        if node in data and not np.array_equal(word[node - 1], data[node]):
            raise ValueError(f"surviving node {node} is inconsistent with decoded data")
    return word


def bits_per_symbol(q: int) -> int:
    """Packing width: whole bytes when the field allows, else floor(log2 q)."""
    if q > 255:
        return 8
    return int(q).bit_length() - 1


def chunk_file(data: bytes, params: CodeParams) -> np.ndarray:
    """Pack bytes into (chunks, k, N) symbol blocks, zero-padded at the tail.

    Bits are consumed MSB-first in groups of bits_per_symbol(q), so every
    symbol value stays below 2**bits <= q.
    """
    bits = bits_per_symbol(params.q)
    block = params.k * params.n
    raw = np.frombuffer(data, dtype=np.uint8)
    if raw.size == 0:
        return np.empty((0, params.k, params.n), dtype=np.int64)
    bitstream = np.unpackbits(raw)
    if bitstream.size % bits:
        bitstream = np.pad(bitstream, (0, bits - bitstream.size % bits))
    weights = 1 << np.arange(bits - 1, -1, -1, dtype=np.int64)
    symbols = bitstream.reshape(-1, bits).astype(np.int64) @ weights
    if symbols.size % block:
        symbols = np.pad(symbols, (0, block - symbols.size % block))
    return symbols.reshape(-1, params.k, params.n)


def unchunk(blocks, original_length: int, params: CodeParams) -> bytes:
    """Invert chunk_file given the original byte length.

    Rejects symbol values that no packed byte stream could produce, which
    catches corrupted or mis-decoded blocks before they round-trip silently.
    """
    bits = bits_per_symbol(params.q)
    blocks = np.asarray(blocks, dtype=np.int64)
    symbols = blocks.reshape(-1)
    limit = min(1 << bits, params.q)
    if symbols.size * bits < original_length * 8:
        raise ValueError("not enough symbols for the recorded length")
    if symbols.size and (symbols.min() < 0 or symbols.max() >= limit):
        raise ValueError("corrupt symbol stream: value out of packing range")
    if original_length == 0:
        return b""
    shifts = np.arange(bits - 1, -1, -1, dtype=np.int64)
    bitstream = ((symbols[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)
    return np.packbits(bitstream[: original_length * 8]).tobytes()[:original_length]
