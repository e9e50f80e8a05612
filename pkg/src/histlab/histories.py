"""
Sets of alternative coarse-grained histories.

A :class:`HistorySet` is a Hamiltonian plus a time-ordered schedule of
projector families. A history is a multi-index ``(a_1, ..., a_n)``; its
chain operator is ``P^n_{a_n}(t_n) ... P^1_{a_1}(t_1)`` with the latest
projector leftmost. Multi-indices are plain tuples of ints and are always
enumerated lexicographically (first slot slowest).

Branch vectors ``C_a |psi>`` are what almost every measure needs, so they
are computed by applying the evolved projectors to the state directly;
the full chain matrices are only built on request.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from histlab.errors import (
    CompletenessViolation,
    DimensionMismatch,
    IndexOutOfRange,
    InvalidPartition,
    ScheduleMismatch,
    TimesNotIncreasing,
)
from histlab.hilbert import (
    DEFAULT_TOLERANCE,
    HermitianOperator,
    Projector,
    ProjectorFamily,
    StateVector,
    ToleranceConfig,
    conjugate,
    make_state,
    matmul,
    max_norm,
    validate_family,
    validate_hermitian,
    validate_projector,
)

HistoryIndex = tuple

__all__ = [
    "HistoryIndex",
    "ScheduledFamily",
    "HistorySet",
    "CoarseHistorySet",
    "BranchVector",
    "Partition",
    "build_history_set",
    "chain_operator",
    "branch_vector",
    "coarse_grain",
    "tensor_compose",
    "heisenberg_family",
    "split_composite_index",
]


@dataclass(frozen=True, eq=False)
class ScheduledFamily:
    """A family placed at slot time ``time``.

    ``reference_time`` is the time at which ``family``'s matrices are the
    Heisenberg-picture operators; ``None`` means they are already given at
    ``time``. ``name`` is an optional handle for model files and the
    command line.
    """

    family: ProjectorFamily
    time: float
    reference_time: float | None = None
    name: str | None = None

    @property
    def ref(self) -> float:
        return self.time if self.reference_time is None else self.reference_time


def heisenberg_family(
    family: ProjectorFamily,
    H: HermitianOperator,
    t_from: float,
    t_to: float,
    tol: ToleranceConfig = DEFAULT_TOLERANCE,
) -> ProjectorFamily:
    """Evolve every member of ``family`` with one shared propagator."""
    if family.dim != H.dim:
        raise DimensionMismatch(f"family dim {family.dim} != Hamiltonian dim {H.dim}")
    dt = t_to - t_from
    if dt == 0 or H.is_zero:
        return family
    members = []
    for p in family.members:
        m = conjugate(p.matrix, H, dt)
        members.append(validate_projector(0.5 * (m + m.conj().T), tol))
    return ProjectorFamily(tuple(members), family.labels)


def _apply_slots(families: Sequence[ProjectorFamily], x: np.ndarray) -> np.ndarray:
    """Apply every chain to ``x`` (shape (d,) or (d, m)); returns (K, *x.shape)."""
    out = x[None, ...]
    for fam in families:
        stacked = fam.stacked  # (n_k, d, d)
        # new[b, a] = P_a @ out[b]; first slot stays slowest
        nxt = np.einsum("aij,bj...->bai...", stacked, out)
        out = nxt.reshape((-1,) + x.shape)
    return out


@dataclass(frozen=True, eq=False)
class HistorySet:
    hamiltonian: HermitianOperator
    schedule: tuple[ScheduledFamily, ...]
    tol: ToleranceConfig = DEFAULT_TOLERANCE

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(s.time for s in self.schedule)

    @property
    def final_time(self) -> float:
        return self.schedule[-1].time

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(s.family) for s in self.schedule)

    @cached_property
    def indices(self) -> tuple[HistoryIndex, ...]:
        return tuple(itertools.product(*(range(n) for n in self.shape)))

    def __len__(self) -> int:
        return int(np.prod(self.shape))

    def position(self, alpha: HistoryIndex) -> int:
        """Row of ``alpha`` in the lexicographic enumeration."""
        alpha = self._check_index(alpha)
        return int(np.ravel_multi_index(alpha, self.shape))

    def _check_index(self, alpha) -> HistoryIndex:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != len(self.shape) or any(not 0 <= a < n for a, n in zip(alpha, self.shape)):
            raise IndexOutOfRange(f"history index {alpha} out of range for shape {self.shape}")
        return alpha

    def label(self, alpha: HistoryIndex) -> str:
        alpha = self._check_index(alpha)
        return ",".join(s.family.labels[a] for s, a in zip(self.schedule, alpha))

    @cached_property
    def heisenberg(self) -> tuple[ProjectorFamily, ...]:
        """Each slot's family evolved from its reference time to its slot time."""
        return tuple(
            heisenberg_family(s.family, self.hamiltonian, s.ref, s.time, self.tol) for s in self.schedule
        )

    def branch_vectors(self, state: StateVector) -> np.ndarray:
        """All branch vectors, shape (K, dim), rows in index order."""
        psi = np.asarray(state.amplitudes)
        if psi.shape[0] != self.dim:
            raise DimensionMismatch(f"state dim {psi.shape[0]} != history dim {self.dim}")
        return _apply_slots(self.heisenberg, psi)

    @cached_property
    def chains(self) -> np.ndarray:
        """All chain operators, shape (K, dim, dim). Memoized."""
        return _apply_slots(self.heisenberg, np.eye(self.dim, dtype=complex))

    def chain(self, alpha: HistoryIndex) -> np.ndarray:
        alpha = self._check_index(alpha)
        if "chains" in self.__dict__:
            return self.chains[self.position(alpha)]
        m = np.eye(self.dim, dtype=complex)
        for fam, a in zip(self.heisenberg, alpha):
            m = fam.members[a].matrix @ m
        return m

    def completeness_residual(self) -> float:
        # sum over all chains factorizes into the product of the family sums
        total = np.eye(self.dim, dtype=complex)
        for fam in self.heisenberg:
            total = matmul(fam.stacked.sum(axis=0), total)
        return max_norm(total - np.eye(self.dim))


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint nonempty blocks of history indices covering a whole set."""

    blocks: tuple[frozenset, ...]

    @classmethod
    def of(cls, blocks: Iterable[Iterable[HistoryIndex]]) -> "Partition":
        return cls(tuple(frozenset(tuple(a) for a in b) for b in blocks))

    @classmethod
    def singletons(cls, indices) -> "Partition":
        return cls.of([[a] for a in indices])

    @classmethod
    def whole(cls, indices) -> "Partition":
        return cls.of([list(indices)])

    @classmethod
    def by(cls, indices, key) -> "Partition":
        """Group indices by ``key(alpha)``; blocks ordered by first appearance."""
        groups: dict = {}
        for a in indices:
            groups.setdefault(key(a), []).append(a)
        return cls.of(groups.values())

    def validate(self, indices) -> None:
        universe = set(indices)
        seen: set = set()
        for i, b in enumerate(self.blocks):
            if not b:
                raise InvalidPartition(f"block {i} is empty", location=i)
            stray = b - universe
            if stray:
                raise InvalidPartition(f"block {i} contains unknown indices {sorted(stray)}", location=i)
            overlap = b & seen
            if overlap:
                raise InvalidPartition(f"block {i} overlaps earlier blocks at {sorted(overlap)}", location=i)
            seen |= b
        missing = universe - seen
        if missing:
            raise InvalidPartition(f"partition does not cover {sorted(missing)}")

    @property
    def largest_block(self) -> int:
        return max(len(b) for b in self.blocks)

    def then(self, outer: "Partition") -> "Partition":
        """Compose with a partition of this partition's coarse indices ``(b,)``."""
        return Partition(tuple(frozenset().union(*(self.blocks[i] for (i,) in ob)) for ob in outer.blocks))


@dataclass(frozen=True, eq=False)
class CoarseHistorySet:
    """Coarse graining of a parent set; histories are indexed ``(block,)``."""

    parent: "HistorySet | CoarseHistorySet"
    partition: Partition

    @property
    def dim(self) -> int:
        return self.parent.dim

    @property
    def hamiltonian(self) -> HermitianOperator:
        return self.parent.hamiltonian

    @property
    def final_time(self) -> float:
        return self.parent.final_time

    @property
    def tol(self) -> ToleranceConfig:
        return self.parent.tol

    @cached_property
    def indices(self) -> tuple[HistoryIndex, ...]:
        return tuple((i,) for i in range(len(self.partition.blocks)))

    def __len__(self) -> int:
        return len(self.partition.blocks)

    def position(self, alpha: HistoryIndex) -> int:
        (i,) = alpha
        if not 0 <= i < len(self):
            raise IndexOutOfRange(f"coarse index {alpha} out of range")
        return i

    def label(self, alpha: HistoryIndex) -> str:
        block = self.partition.blocks[self.position(alpha)]
        ordered = sorted(block, key=self.parent.position)
        return "|".join(self.parent.label(a) for a in ordered)

    @cached_property
    def membership(self) -> np.ndarray:
        """0/1 matrix mapping parent rows to coarse rows, shape (K_coarse, K_parent)."""
        m = np.zeros((len(self), len(self.parent)))
        for i, block in enumerate(self.partition.blocks):
            for a in block:
                m[i, self.parent.position(a)] = 1.0
        return m

    def branch_vectors(self, state: StateVector) -> np.ndarray:
        return self.membership @ self.parent.branch_vectors(state)

    @cached_property
    def chains(self) -> np.ndarray:
        return np.einsum("ck,kij->cij", self.membership, self.parent.chains)

    def chain(self, alpha: HistoryIndex) -> np.ndarray:
        return self.chains[self.position(alpha)]

    def completeness_residual(self) -> float:
        return max_norm(self.chains.sum(axis=0) - np.eye(self.dim))


@dataclass(frozen=True, eq=False)
class BranchVector:
    index: HistoryIndex
    vector: np.ndarray

    @property
    def probability(self) -> float:
        return float(np.vdot(self.vector, self.vector).real)


def build_history_set(
    H: HermitianOperator,
    schedule: Sequence[ScheduledFamily],
    tol: ToleranceConfig = DEFAULT_TOLERANCE,
) -> HistorySet:
    """Validate a schedule and return the history set it defines.

    Raises
    ------
    TimesNotIncreasing, DimensionMismatch, CompletenessViolation
    """
    schedule = tuple(schedule)
    if not schedule:
        raise ScheduleMismatch("schedule must contain at least one family")
    for k, s in enumerate(schedule):
        if s.family.dim != H.dim:
            raise DimensionMismatch(
                f"family at slot {k} has dim {s.family.dim}, Hamiltonian has dim {H.dim}", location=k
            )
    times = [s.time for s in schedule]
    for k in range(1, len(times)):
        if not times[k] > times[k - 1]:
            raise TimesNotIncreasing(f"slot {k} time {times[k]} is not after {times[k - 1]}", location=k)
    hs = HistorySet(H, schedule, tol)
    residual = hs.completeness_residual()
    if residual > tol.eps_proj:
        raise CompletenessViolation(f"chain operators do not sum to I (max residual {residual:.3e})", magnitude=residual)
    return hs


def chain_operator(hset, alpha: HistoryIndex) -> np.ndarray:
    return hset.chain(alpha)


def branch_vector(hset, state: StateVector, alpha: HistoryIndex) -> BranchVector:
    if state.dim != hset.dim:
        raise DimensionMismatch(f"state dim {state.dim} != history dim {hset.dim}")
    if isinstance(hset, HistorySet):
        alpha = hset._check_index(alpha)
        v = np.asarray(state.amplitudes)
        for fam, a in zip(hset.heisenberg, alpha):
            v = fam.members[a].matrix @ v
    else:
        v = hset.branch_vectors(state)[hset.position(alpha)]
    return BranchVector(tuple(alpha), v)


def coarse_grain(hset, partition: Partition) -> CoarseHistorySet:
    """Coarse-grain by summing chain operators over each block."""
    partition.validate(hset.indices)
    return CoarseHistorySet(hset, partition)


def split_composite_index(alpha: HistoryIndex, b_shape: Sequence[int]) -> tuple[HistoryIndex, HistoryIndex]:
    """Inverse of the slot-wise flattening ``c_k = a_k * n_b_k + b_k``."""
    a = tuple(int(c) // int(n) for c, n in zip(alpha, b_shape))
    b = tuple(int(c) % int(n) for c, n in zip(alpha, b_shape))
    return a, b


def tensor_compose(
    set_a: HistorySet,
    state_a: StateVector,
    set_b: HistorySet,
    state_b: StateVector,
    tol: ToleranceConfig | None = None,
) -> tuple[HistorySet, StateVector]:
    """Histories of two non-interacting subsystems as one composite set.

    Slots are paired positionally and must share their times. Composite
    members at slot k are ``kron(P^a_i, P^b_j)`` enumerated with ``i``
    slowest, so composite component ``c_k = i * n_b_k + j``.
    """
    tol = tol or set_a.tol
    if len(set_a.schedule) != len(set_b.schedule):
        raise ScheduleMismatch(
            f"schedules have different lengths ({len(set_a.schedule)} vs {len(set_b.schedule)})"
        )
    for k, (ta, tb) in enumerate(zip(set_a.times, set_b.times)):
        if not np.isclose(ta, tb, rtol=1e-12, atol=1e-12):
            raise ScheduleMismatch(f"slot {k} times differ ({ta} vs {tb})", location=k)
    if state_a.dim != set_a.dim or state_b.dim != set_b.dim:
        raise DimensionMismatch("state dims must match their history sets")
    ia, ib = np.eye(set_a.dim), np.eye(set_b.dim)
    H = validate_hermitian(
        np.kron(set_a.hamiltonian.matrix, ib) + np.kron(ia, set_b.hamiltonian.matrix), tol
    )
    schedule = []
    for k, (fa, fb) in enumerate(zip(set_a.heisenberg, set_b.heisenberg)):
        members, labels = [], []
        for pa, la_ in zip(fa.members, fa.labels):
            for pb, lb in zip(fb.members, fb.labels):
                members.append(Projector(np.kron(pa.matrix, pb.matrix), pa.rank * pb.rank))
                labels.append(f"{la_}*{lb}")
        fam = validate_family(members, tol, labels)
        schedule.append(ScheduledFamily(fam, set_a.times[k]))
    state = make_state(np.kron(state_a.amplitudes, state_b.amplitudes), tol)
    return build_history_set(H, schedule, tol), state
