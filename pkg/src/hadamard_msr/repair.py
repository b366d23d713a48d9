"""Single-node repair: matrices, plans, execution, and rank verification.

Every repair downloads exactly N/2 symbols from each of the k+1 surviving
nodes: helper l applies a half-height repair matrix to its content (for the
second parity's repair, after scaling by its own coding diagonal) and ships
the result.  The repairer then runs two counted phases: interference
cancellation, which collapses the k+1 payloads into two half-vectors u1, u2
tied to the failed node's content alone, and recover, which inverts the
stacked relation [S; S~ D] to rebuild all N symbols.

Two strategies share the same column; the "new" one keeps payloads in the
standard basis, where every repair-matrix row has two +-1 entries, while the
"original" one re-expresses the same functionals in the Sylvester-Hadamard
basis: downloads ride the fast transform, but cancellation and recovery turn
dense.  The operation counters make that cost difference measurable.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache

import numpy as np

from .codec import CodeParams, coding_matrix, inverse_coding_matrix
from .design import half_hadamard_apply, lemma2_partner, sylvester
from .field import OpCounter

STANDARD = "standard"
SYLVESTER = "sylvester"
STRATEGIES = ("new", "original")
STRATEGY_BASIS = {"new": STANDARD, "original": SYLVESTER}


@dataclass(frozen=True)
class Basis:
    """Basis of F_q^(2^k): unit vectors, or Sylvester-Hadamard columns."""

    kind: str
    k: int

    def __post_init__(self):
        if self.kind not in (STANDARD, SYLVESTER):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.k < 1:
            raise ValueError("basis order exponent must be at least 1")

    @property
    def order(self) -> int:
        return 1 << self.k

    def vectors(self) -> np.ndarray:
        """Basis vectors as columns of a 2^k x 2^k integer matrix."""
        if self.kind == STANDARD:
            return np.eye(self.order, dtype=np.int64)
        return sylvester(self.k)


class RepairMatrix:
    """Half-height matrix mapping column j to sign[j] * basis vector index[j].

    Each basis index appears in exactly two columns; with the standard basis
    the dense form therefore has two +-1 entries per row.  All constructions
    here have +1 on the first occurrence of every row and one uniform sign on
    the second occurrences, which is what lets the Sylvester-basis form ride
    half_hadamard_apply.
    """

    def __init__(self, basis: Basis, index, sign):
        self.basis = basis
        self.index = np.asarray(index, dtype=np.int64)
        self.sign = np.asarray(sign, dtype=np.int64)
        n = self.index.size
        half = basis.order
        if n != 2 * half or self.sign.shape != (n,):
            raise ValueError("need N columns of index and sign for N/2 rows")
        if not np.all(np.bincount(self.index, minlength=half) == 2):
            raise ValueError("every basis index must be used exactly twice")
        if not np.all(np.abs(self.sign) == 1):
            raise ValueError("signs must be +1 or -1")
        order = np.argsort(self.index, kind="stable").reshape(half, 2)
        self.first = order[:, 0]
        self.second = order[:, 1]
        if not np.all(self.sign[self.first] == 1):
            raise ValueError("first occurrence of each row must carry sign +1")
        seconds = np.unique(self.sign[self.second])
        if seconds.size != 1:
            raise ValueError("second-occurrence signs must be uniform")
        self.second_sign = int(seconds[0])

    @property
    def n(self) -> int:
        return self.index.size

    @property
    def rows(self) -> int:
        return self.basis.order

    def dense(self, q: int | None = None) -> np.ndarray:
        """Dense rows x N form; over the integers when q is omitted."""
        half, n = self.rows, self.n
        std = np.zeros((half, n), dtype=np.int64)
        std[self.index, np.arange(n)] = self.sign
        out = std if self.basis.kind == STANDARD else self.basis.vectors() @ std
        return out if q is None else out % q

    def apply(self, vec, q: int, counter: OpCounter | None = None) -> np.ndarray:
        """Counted matrix-vector product, exploiting the two-per-row shape.

        Standard basis: one addition per row.  Sylvester basis: the gathered
        halves feed two fast transforms plus a signed combine.
        """
        vec = np.asarray(vec, dtype=np.int64)
        if vec.shape != (self.n,):
            raise ValueError(f"vector must have shape ({self.n},)")
        gathered = np.concatenate([vec[self.first], vec[self.second]])
        if self.basis.kind == STANDARD:
            if counter is not None:
                counter.adds += self.rows
            return (gathered[: self.rows] + self.second_sign * gathered[self.rows :]) % q
        return half_hadamard_apply(gathered, self.second_sign, q, counter)


def systematic_repair_matrix(k: int, i: int, basis: Basis) -> RepairMatrix:
    """Repair matrix of systematic node i: pairs columns j and j + 2^i."""
    if not 1 <= i <= k:
        raise ValueError(f"systematic index {i} out of range for k={k}")
    j = np.arange(1 << (k + 1), dtype=np.int64)
    index = (j >> (i + 1) << i) + (j & ((1 << i) - 1))
    return RepairMatrix(basis, index, np.ones_like(j))


def parity1_repair_matrices(k: int, basis: Basis) -> tuple[RepairMatrix, RepairMatrix]:
    """Matrices (S, S~) for the first parity: pairs columns j and N-1-j."""
    n = 1 << (k + 1)
    j = np.arange(n, dtype=np.int64)
    index = np.where(j < n // 2, j, n - 1 - j)
    tilde_sign = np.where(j < n // 2, 1, -1)
    return (
        RepairMatrix(basis, index, np.ones_like(j)),
        RepairMatrix(basis, index, tilde_sign),
    )


def parity2_repair_matrices(k: int, basis: Basis) -> tuple[RepairMatrix, RepairMatrix]:
    """Matrices (S, S~) for the second parity: pairs j with lemma2_partner(j)."""
    n = 1 << (k + 1)
    index = np.empty(n, dtype=np.int64)
    index[: n // 2] = np.arange(n // 2)
    for m in range(n // 2):
        index[lemma2_partner(m, n)] = m
    j = np.arange(n, dtype=np.int64)
    tilde_sign = np.where(j < n // 2, 1, -1)
    return (
        RepairMatrix(basis, index, np.ones_like(j)),
        RepairMatrix(basis, index, tilde_sign),
    )


@dataclass(frozen=True)
class HelperTask:
    """What one surviving node computes before shipping N/2 symbols."""

    matrix: RepairMatrix
    premultiply: np.ndarray | None = None

    def payload(self, vec, q: int, counter: OpCounter | None = None) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.int64)
        if self.premultiply is not None:
            if counter is not None:
                free = (
                    (self.premultiply == 0)
                    | (self.premultiply == 1)
                    | (self.premultiply == q - 1)
                )
                counter.muls += int(np.count_nonzero(~free))
            vec = self.premultiply * vec % q
        return self.matrix.apply(vec, q, counter)


@dataclass(frozen=True)
class PairRecover:
    """Recover map with two nonzeros per row, from the paired 2x2 blocks.

    Row j1[m] of the inverse stack is (w11[m], w12[m]) against (u1[m], u2[m]),
    row j2[m] is (w21[m], w22[m]).
    """

    j1: np.ndarray
    j2: np.ndarray
    w11: np.ndarray
    w12: np.ndarray
    w21: np.ndarray
    w22: np.ndarray

    def dense(self, n: int) -> np.ndarray:
        half = self.j1.size
        out = np.zeros((n, n), dtype=np.int64)
        cols = np.arange(half)
        out[self.j1, cols] = self.w11
        out[self.j1, cols + half] = self.w12
        out[self.j2, cols] = self.w21
        out[self.j2, cols + half] = self.w22
        return out


@dataclass
class RepairCounters:
    """One counter per repair phase."""

    download: OpCounter = dataclass_field(default_factory=lambda: OpCounter("download"))
    cancel: OpCounter = dataclass_field(default_factory=lambda: OpCounter("cancel"))
    recover: OpCounter = dataclass_field(default_factory=lambda: OpCounter("recover"))

    @property
    def adds(self) -> int:
        return self.download.adds + self.cancel.adds + self.recover.adds

    @property
    def muls(self) -> int:
        return self.download.muls + self.cancel.muls + self.recover.muls

    def by_phase(self) -> tuple[dict, dict]:
        phases = {"download": self.download, "cancel": self.cancel, "recover": self.recover}
        return (
            {name: c.adds for name, c in phases.items()},
            {name: c.muls for name, c in phases.items()},
        )


@dataclass(frozen=True)
class RepairPlan:
    """Everything needed to rebuild one failed node from helper payloads."""

    params: CodeParams
    failed: int
    strategy: str
    helper_matrices: dict
    seeds: tuple
    cancel_nodes: tuple
    cancel_diagonals: dict
    cancel_dense: dict | None
    cancel_sign: int
    recover_map: PairRecover | np.ndarray

    @property
    def downloaded_symbols(self) -> int:
        return (self.params.k + 1) * self.params.n // 2

    def helper_payload(self, node: int, vec, counter: OpCounter | None = None) -> np.ndarray:
        if node not in self.helper_matrices:
            raise ValueError(f"node {node} is not a helper for this repair")
        return self.helper_matrices[node].payload(vec, self.params.q, counter)

    def recover_dense(self) -> np.ndarray:
        if isinstance(self.recover_map, PairRecover):
            return self.recover_map.dense(self.params.n)
        return self.recover_map

    def assemble(self, payloads: dict, counters: RepairCounters | None = None) -> np.ndarray:
        """Cancel interference and recover the failed node's N symbols."""
        f = self.params.field
        cancel = counters.cancel if counters is not None else None
        recover = counters.recover if counters is not None else None
        combine = f.vec_add if self.cancel_sign > 0 else f.vec_sub
        u1 = np.array(payloads[self.seeds[0]], dtype=np.int64)
        u2 = np.array(payloads[self.seeds[1]], dtype=np.int64)
        for node in self.cancel_nodes:
            d = np.asarray(payloads[node], dtype=np.int64)
            u1 = combine(u1, d, cancel)
            if self.cancel_dense is None:
                scaled = f.diag_mul(self.cancel_diagonals[node], d, cancel)
            else:
                scaled = f.mat_vec(self.cancel_dense[node], d, cancel)
            u2 = combine(u2, scaled, cancel)
        if isinstance(self.recover_map, PairRecover):
            r = self.recover_map
            out = np.zeros(self.params.n, dtype=np.int64)
            out[r.j1] = f.vec_add(f.diag_mul(r.w11, u1, recover), f.diag_mul(r.w12, u2, recover), recover)
            out[r.j2] = f.vec_add(f.diag_mul(r.w21, u1, recover), f.diag_mul(r.w22, u2, recover), recover)
            return out
        return f.mat_vec(self.recover_map, np.concatenate([u1, u2]), recover)


def _plan_pieces(params: CodeParams, failed: int, basis: Basis):
    """Matrices, helper tasks, seeds, and cancel/recover diagonals per case."""
    k = params.k
    alpha = [coding_matrix(params, l) for l in range(1, k + 1)]
    if 1 <= failed <= k:
        s = systematic_repair_matrix(k, failed, basis)
        s_tilde = s
        helpers = {l: HelperTask(s) for l in range(1, k + 3) if l != failed}
        seeds = (k + 1, k + 2)
        cancel_nodes = tuple(l for l in range(1, k + 1) if l != failed)
        diag_recover = alpha[failed - 1]
        interference = {l: alpha[l - 1] for l in cancel_nodes}
        cancel_sign = -1
    elif failed == k + 1:
        s, s_tilde = parity1_repair_matrices(k, basis)
        helpers = {l: HelperTask(s) for l in range(1, k + 1)}
        helpers[k + 2] = HelperTask(s_tilde)
        seeds = (1, k + 2)
        cancel_nodes = tuple(range(2, k + 1))
        diag_recover = alpha[0]
        interference = {l: (alpha[0] - alpha[l - 1]) % params.q for l in cancel_nodes}
        cancel_sign = 1
    elif failed == k + 2:
        s, s_tilde = parity2_repair_matrices(k, basis)
        helpers = {
            l: HelperTask(s, premultiply=alpha[l - 1]) for l in range(1, k + 1)
        }
        helpers[k + 1] = HelperTask(s_tilde)
        seeds = (1, k + 1)
        cancel_nodes = tuple(range(2, k + 1))
        p = [inverse_coding_matrix(params, l) for l in range(1, k + 1)]
        diag_recover = p[0]
        interference = {l: (p[0] - p[l - 1]) % params.q for l in cancel_nodes}
        cancel_sign = 1
    else:
        raise ValueError(f"node id {failed} out of range 1..{k + 2}")
    return s, s_tilde, helpers, seeds, cancel_nodes, diag_recover, interference, cancel_sign


@lru_cache(maxsize=None)
def build_repair_plan(params: CodeParams, failed: int, strategy: str) -> RepairPlan:
    """Repair plan for one failed node; plans are cached and immutable.

    The interference diagonals B_l sample the case's difference diagonal at
    each row's first column; the recover map inverts the stacked relation
    u1 = S g, u2 = (S~ D) g, pairwise in the standard basis and by dense
    Gauss-Jordan elimination in the Sylvester basis.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    basis = Basis(STRATEGY_BASIS[strategy], params.k)
    f = params.field
    q = params.q
    s, s_tilde, helpers, seeds, cancel_nodes, diag_recover, interference, cancel_sign = _plan_pieces(
        params, failed, basis
    )
    j1, j2 = s.first, s.second
    cancel_diagonals = {l: d[j1] for l, d in interference.items()}
    cancel_dense = None
    if basis.kind == SYLVESTER:
        h = basis.vectors()
        h_inv = h * f.inv(basis.order) % q
        cancel_dense = {
            l: h @ np.diag(b) @ h_inv % q for l, b in cancel_diagonals.items()
        }

    if basis.kind == STANDARD:
        c1 = diag_recover[j1] % q
        c2 = s_tilde.second_sign * diag_recover[j2] % q
        det_inv = f.inv_vec(c2 - s.second_sign * c1)
        recover: PairRecover | np.ndarray = PairRecover(
            j1=j1,
            j2=j2,
            w11=c2 * det_inv % q,
            w12=-s.second_sign * det_inv % q,
            w21=-c1 * det_inv % q,
            w22=det_inv,
        )
    else:
        stack = np.vstack([s.dense(q), s_tilde.dense(q) * diag_recover[None, :] % q])
        recover = f.inv_matrix(stack)

    return RepairPlan(
        params=params,
        failed=failed,
        strategy=strategy,
        helper_matrices=helpers,
        seeds=seeds,
        cancel_nodes=cancel_nodes,
        cancel_diagonals=cancel_diagonals,
        cancel_dense=cancel_dense,
        cancel_sign=cancel_sign,
        recover_map=recover,
    )


def execute_repair(
    plan: RepairPlan, survivors, counters: RepairCounters | None = None
) -> np.ndarray:
    """Rebuild the failed node's content from the k+1 survivors.

    `survivors` is either a map node id -> length-N vector covering all
    helpers, or a full (k+2, N) codeword array whose failed row is ignored.
    """
    if not isinstance(survivors, dict):
        word = np.asarray(survivors, dtype=np.int64)
        survivors = {node: word[node - 1] for node in plan.helper_matrices}
    download = counters.download if counters is not None else None
    payloads = {}
    for node in plan.helper_matrices:
        if node not in survivors:
            raise ValueError(f"missing helper data for node {node}")
        payloads[node] = plan.helper_payload(node, survivors[node], download)
    return plan.assemble(payloads, counters)


@dataclass(frozen=True)
class RankCondition:
    """One rank requirement, checked by pair determinants and by elimination.

    The stacked matrix [S; S~ D] decomposes into per-pair 2x2 blocks, so its
    rank is N/2 plus the number of nonzero block determinants: full rank N
    demands all nonzero (recover), and interference alignment demands all
    zero (rank N/2).  `predicted_rank` comes from the determinants,
    `elim_rank` from Gaussian elimination on the dense stack.
    """

    failed: int
    label: str
    expected_rank: int
    pair_ok: bool
    predicted_rank: int
    elim_rank: int

    @property
    def methods_agree(self) -> bool:
        return self.predicted_rank == self.elim_rank

    @property
    def ok(self) -> bool:
        return self.pair_ok and self.methods_agree and self.elim_rank == self.expected_rank


@dataclass(frozen=True)
class RankReport:
    params: CodeParams
    strategy: str
    conditions: tuple

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.conditions)

    def failures(self) -> list:
        return [c for c in self.conditions if not c.ok]


def _rank_condition(
    params: CodeParams,
    failed: int,
    label: str,
    s: RepairMatrix,
    s_tilde: RepairMatrix,
    diag: np.ndarray,
    full_rank: bool,
) -> RankCondition:
    f, q, n = params.field, params.q, params.n
    half = n // 2
    j1, j2 = s.first, s.second
    c1 = diag[j1] % q
    c2 = s_tilde.second_sign * diag[j2] % q
    dets = (c2 - s.second_sign * c1) % q
    nonzero = int(np.count_nonzero(dets))
    pair_ok = nonzero == half if full_rank else nonzero == 0
    stack = np.vstack([s.dense(q), s_tilde.dense(q) * diag[None, :] % q])
    return RankCondition(
        failed=failed,
        label=label,
        expected_rank=n if full_rank else half,
        pair_ok=pair_ok,
        predicted_rank=half + nonzero,
        elim_rank=f.rank(stack),
    )


def verify_rank_conditions(params: CodeParams, strategy: str = "new") -> RankReport:
    """Check every repair's recover and interference rank requirement.

    Per failed node: the recover stack [S; S~ D] must reach full rank N, and
    each interfering helper's stack must collapse to rank N/2.  Both the
    pair-determinant argument and an elimination oracle are run; a condition
    passes only when they agree and match the expectation.  Reports failures
    instead of raising, so deliberately broken parameter sets can be graded.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    basis = Basis(STRATEGY_BASIS[strategy], params.k)
    conditions = []
    for failed in range(1, params.k + 3):
        try:
            s, s_tilde, _, _, cancel_nodes, diag_recover, interference, _ = _plan_pieces(
                params, failed, basis
            )
        except ZeroDivisionError:
            conditions.append(
                RankCondition(
                    failed=failed,
                    label="coding diagonal not invertible",
                    expected_rank=params.n,
                    pair_ok=False,
                    predicted_rank=0,
                    elim_rank=0,
                )
            )
            continue
        conditions.append(
            _rank_condition(params, failed, "recover", s, s_tilde, diag_recover, True)
        )
        for l in cancel_nodes:
            conditions.append(
                _rank_condition(
                    params,
                    failed,
                    f"interference from node {l}",
                    s,
                    s_tilde,
                    interference[l],
                    False,
                )
            )
    return RankReport(params=params, strategy=strategy, conditions=tuple(conditions))
