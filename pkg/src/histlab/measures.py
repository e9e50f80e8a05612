"""
Record correlations, the decoherence functional, and probabilities.

Three measures over a set of histories ``{C_a}`` in a pure state ``psi``:

* record correlation   ``Rc(a, b) = Re <psi| R_a C_b |psi>``
* decoherence functional ``D(a, b) = <psi_a | psi_b>``, ``psi_a = C_a psi``
* extended probability ``wp(a) = Re <psi| C_a |psi>``

plus Born-rule record probabilities, canonical (branch-projector)
records, the classification hierarchy and conditional probabilities for
retrodiction. Everything reduces to inner products of branch vectors with
record vectors ``R_a psi``, so chain matrices are never formed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from histlab.errors import (
    AlignmentIncomplete,
    AllBranchesNull,
    DimensionMismatch,
    HistlabError,
    NotDecoherent,
    NotRecorded,
    RecordTimeNotAfterHistories,
    ScheduleMismatch,
    WrongKind,
    ZeroEvidence,
)
from histlab.hilbert import (
    DEFAULT_TOLERANCE,
    Projector,
    ProjectorFamily,
    StateVector,
    ToleranceConfig,
    max_norm,
    validate_family,
    validate_projector,
)
from histlab.histories import (
    CoarseHistorySet,
    HistoryIndex,
    HistorySet,
    ScheduledFamily,
    build_history_set,
    heisenberg_family,
)

__all__ = [
    "RecordFamily",
    "MeasureMatrix",
    "ProbabilityTable",
    "Witness",
    "Verdict",
    "Classification",
    "make_records",
    "check_records",
    "correlation_matrix",
    "is_recorded",
    "decoherence_matrix",
    "is_medium_decoherent",
    "extended_probabilities",
    "record_probabilities",
    "history_probabilities",
    "strong_record_check",
    "canonical_records",
    "classify",
    "retrodict",
    "product_fine_graining",
    "incompatible",
    "coarse_grain_records",
    "tensor_compose_records",
]

CORRELATION = "correlation"
DECOHERENCE = "decoherence"


@dataclass(frozen=True, eq=False)
class RecordFamily:
    """Records at ``record_time``, member ``i`` aligned with history ``alignment[i]``.

    ``alignment[i] is None`` marks an unaligned residual member. Matrices
    are Heisenberg operators at ``reference_time`` (default: the record
    time itself) and are evolved to ``record_time`` with the history
    set's Hamiltonian when used.
    """

    family: ProjectorFamily
    record_time: float
    alignment: tuple
    reference_time: float | None = None
    # evolved families keyed by Hamiltonian identity
    _evolved: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.alignment) != len(self.family):
            raise AlignmentIncomplete(
                f"{len(self.family)} records but {len(self.alignment)} alignment entries"
            )

    @property
    def dim(self) -> int:
        return self.family.dim

    @property
    def ref(self) -> float:
        return self.record_time if self.reference_time is None else self.reference_time

    def aligned_positions(self) -> dict:
        return {a: i for i, a in enumerate(self.alignment) if a is not None}


def make_records(family: ProjectorFamily, record_time: float, alignment=None, reference_time=None) -> RecordFamily:
    """Wrap a family as records; default alignment is one-slot indices ``(i,)``."""
    if alignment is None:
        alignment = [(i,) for i in range(len(family))]
    alignment = tuple(None if a is None else tuple(int(x) for x in a) for a in alignment)
    return RecordFamily(family, float(record_time), alignment, reference_time)


@dataclass(frozen=True)
class Witness:
    row: object
    col: object
    magnitude: float


@dataclass(frozen=True)
class Verdict:
    """Outcome of a threshold test plus the entry that decided it."""

    holds: bool
    witness: Witness | None
    threshold: float

    def __bool__(self) -> bool:
        return self.holds

    @property
    def magnitude(self) -> float:
        return 0.0 if self.witness is None else self.witness.magnitude


@dataclass(frozen=True, eq=False)
class MeasureMatrix:
    kind: str
    entries: np.ndarray
    row_keys: tuple
    col_keys: tuple
    raw: np.ndarray | None = None  # complex <psi|R_a C_b|psi>, correlation only

    @property
    def normalization(self) -> float:
        return float(np.sum(self.entries).real)

    def __getitem__(self, key):
        r, c = key
        return self.entries[self.row_keys.index(r), self.col_keys.index(c)]

    def off_diagonal_mask(self) -> np.ndarray:
        return np.array([[r != c for c in self.col_keys] for r in self.row_keys], dtype=bool).reshape(
            len(self.row_keys), len(self.col_keys)
        )

    def worst_off_diagonal(self) -> Witness | None:
        mask = self.off_diagonal_mask()
        if not mask.any():
            return None
        mags = np.where(mask, np.abs(self.entries), -1.0)
        i, j = np.unravel_index(int(np.argmax(mags)), mags.shape)
        return Witness(self.row_keys[i], self.col_keys[j], float(mags[i, j]))


@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    values: Mapping
    extended: bool = False

    def __getitem__(self, key) -> float:
        return self.values[key]

    def __len__(self) -> int:
        return len(self.values)

    def items(self):
        return self.values.items()

    @property
    def total(self) -> float:
        return float(sum(self.values.values()))

    def worst(self):
        """(key, value) furthest outside [0, 1], or the minimum when all are in range."""
        def excess(kv):
            v = kv[1]
            return max(-v, v - 1.0)
        return max(self.values.items(), key=excess)


@dataclass(frozen=True, eq=False)
class Classification:
    strongly_recorded: bool | None
    recorded: bool | None
    medium_decoherent: bool
    ep_in_range: bool
    witnesses: dict = field(default_factory=dict)
    records_source: str | None = None
    tolerance: ToleranceConfig = DEFAULT_TOLERANCE
    extended: ProbabilityTable | None = None

    @property
    def flags(self) -> dict:
        return {
            "strongly_recorded": self.strongly_recorded,
            "recorded": self.recorded,
            "medium_decoherent": self.medium_decoherent,
            "ep_in_range": self.ep_in_range,
        }


# -- helpers -----------------------------------------------------------------


def _check_state(state: StateVector, hset) -> np.ndarray:
    if state.dim != hset.dim:
        raise DimensionMismatch(f"state dim {state.dim} != history dim {hset.dim}")
    return np.asarray(state.amplitudes)


def _record_family_at_time(records: RecordFamily, hset) -> ProjectorFamily:
    if records.dim != hset.dim:
        raise DimensionMismatch(f"record dim {records.dim} != history dim {hset.dim}")
    H = hset.hamiltonian
    hit = records._evolved.get(id(H))
    if hit is None or hit[0] is not H:
        hit = (H, heisenberg_family(records.family, H, records.ref, records.record_time, hset.tol))
        records._evolved[id(H)] = hit
    return hit[1]


def _check_alignment(records: RecordFamily, hset, allow_residual: bool = True) -> None:
    aligned = [a for a in records.alignment if a is not None]
    if len(set(aligned)) != len(aligned):
        raise AlignmentIncomplete("two records are aligned with the same history")
    universe = set(hset.indices)
    stray = set(aligned) - universe
    if stray:
        raise AlignmentIncomplete(f"records aligned with unknown histories {sorted(stray)}")
    missing = universe - set(aligned)
    if missing:
        raise AlignmentIncomplete(f"histories without a record: {sorted(missing)[:5]}")
    if not allow_residual and len(aligned) != len(records.alignment):
        raise AlignmentIncomplete("unaligned residual record present")


def check_records(records: RecordFamily, hset) -> None:
    """Records must come after the last history time and align one-to-one with the histories.

    Raises
    ------
    DimensionMismatch, RecordTimeNotAfterHistories, AlignmentIncomplete
    """
    if records.dim != hset.dim:
        raise DimensionMismatch(f"record dim {records.dim} != history dim {hset.dim}")
    if not records.record_time > hset.final_time:
        raise RecordTimeNotAfterHistories(
            f"record time {records.record_time} is not after the last history time {hset.final_time}"
        )
    _check_alignment(records, hset)


def _record_vectors(records: RecordFamily, hset, psi: np.ndarray):
    """Rows R_a psi ordered as hset.indices, then residual rows; and the row keys."""
    fam = _record_family_at_time(records, hset)
    pos = records.aligned_positions()
    order = [pos[a] for a in hset.indices]
    residual = [i for i, a in enumerate(records.alignment) if a is None]
    rows = order + residual
    vecs = fam.stacked[rows] @ psi
    keys = tuple(hset.indices) + tuple(("residual", i) for i in range(len(residual)))
    return vecs, keys


# -- the three measures --------------------------------------------------------


def correlation_matrix(state: StateVector, hset, records: RecordFamily) -> MeasureMatrix:
    """``Re <psi|R_a C_b|psi>``; rows are records (aligned order, then residual)."""
    psi = _check_state(state, hset)
    check_records(records, hset)
    rvecs, row_keys = _record_vectors(records, hset, psi)
    branches = hset.branch_vectors(state)
    raw = rvecs.conj() @ branches.T
    return MeasureMatrix(CORRELATION, raw.real.copy(), row_keys, tuple(hset.indices), raw)


def _threshold_verdict(m: MeasureMatrix, eps: float) -> Verdict:
    w = m.worst_off_diagonal()
    return Verdict(w is None or w.magnitude <= eps, w, eps)


def is_recorded(m: MeasureMatrix, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> Verdict:
    if m.kind != CORRELATION:
        raise WrongKind(f"is_recorded needs a correlation matrix, got {m.kind}")
    return _threshold_verdict(m, tol.eps_rec)


def decoherence_matrix(state: StateVector, hset) -> MeasureMatrix:
    """Gram matrix of the branch vectors."""
    _check_state(state, hset)
    b = hset.branch_vectors(state)
    d = b.conj() @ b.T
    keys = tuple(hset.indices)
    return MeasureMatrix(DECOHERENCE, 0.5 * (d + d.conj().T), keys, keys)


def is_medium_decoherent(m: MeasureMatrix, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> Verdict:
    if m.kind != DECOHERENCE:
        raise WrongKind(f"is_medium_decoherent needs a decoherence matrix, got {m.kind}")
    return _threshold_verdict(m, tol.eps_dec)


def extended_probabilities(state: StateVector, hset, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> ProbabilityTable:
    psi = _check_state(state, hset)
    vals = (hset.branch_vectors(state) @ psi.conj()).real
    values = dict(zip(hset.indices, (float(v) for v in vals)))
    out = any(v < -tol.eps_dec or v > 1 + tol.eps_dec for v in values.values())
    return ProbabilityTable(values, extended=out)


def record_probabilities(state: StateVector, records: RecordFamily, hset=None) -> ProbabilityTable:
    """Born probabilities ``||R_a psi||^2`` keyed by alignment (``None`` for residual)."""
    psi = np.asarray(state.amplitudes)
    if records.dim != psi.shape[0]:
        raise DimensionMismatch(f"record dim {records.dim} != state dim {psi.shape[0]}")
    fam = records.family if hset is None else _record_family_at_time(records, hset)
    vecs = fam.stacked @ psi
    probs = np.einsum("ij,ij->i", vecs.conj(), vecs).real
    values = {}
    for a, p in zip(records.alignment, probs):
        values[a] = values.get(a, 0.0) + float(p)
    return ProbabilityTable(values, extended=False)


def history_probabilities(
    state: StateVector,
    hset,
    records: RecordFamily | None = None,
    tol: ToleranceConfig = DEFAULT_TOLERANCE,
) -> ProbabilityTable:
    """Probabilities of a recorded set: the Born probabilities of its records.

    Without ``records`` the canonical branch-projector records are tried.

    Raises
    ------
    NotRecorded
        The records do not record the set, or no canonical records exist
        because the set does not decohere. No probabilities are assigned.
    """
    if records is None:
        try:
            records = canonical_records(state, hset, tol)
        except NotDecoherent as exc:
            raise NotRecorded(f"no records available: {exc}") from exc
    corr = correlation_matrix(state, hset, records)
    verdict = is_recorded(corr, tol)
    if not verdict:
        w = verdict.witness
        raise NotRecorded(
            f"set is not recorded: |Rc{w.row, w.col}| = {w.magnitude:.3e} > {tol.eps_rec:.1e}"
        )
    prec = record_probabilities(state, records, hset)
    ep = extended_probabilities(state, hset, tol)
    n_rows = len(corr.row_keys)
    n_cols = len(corr.col_keys)
    values = {}
    for a in hset.indices:
        p = prec[a]
        # p_rec(a) = row sum, wp(a) = column sum; they share the diagonal entry
        bound = (n_rows + n_cols - 2) * tol.eps_rec + 1e-12
        if abs(p - ep[a]) > bound:
            raise HistlabError(f"record and extended probabilities disagree at {a}: {p} vs {ep[a]}")
        values[a] = p
    return ProbabilityTable(values, extended=False)


def strong_record_check(
    state: StateVector, hset, records: RecordFamily, tol: ToleranceConfig = DEFAULT_TOLERANCE
) -> Verdict:
    """Is ``R_a psi = C_a psi`` for every history, within ``eps_rec`` in norm?"""
    psi = _check_state(state, hset)
    _check_alignment(records, hset)
    rvecs, keys = _record_vectors(records, hset, psi)
    branches = hset.branch_vectors(state)
    k = len(hset.indices)
    diff = rvecs.copy()
    diff[:k] -= branches
    res = np.linalg.norm(diff, axis=1)
    i = int(np.argmax(res))
    w = Witness(keys[i], keys[i], float(res[i]))
    return Verdict(w.magnitude <= tol.eps_rec, w, tol.eps_rec)


def canonical_records(state: StateVector, hset, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> RecordFamily:
    """Records ``|psi_a><psi_a| / ||psi_a||^2`` for a decoherent set.

    Branches with norm at most ``eps_rec`` get the zero projector. The
    surviving normalized branches are symmetrically orthonormalized (a
    no-op when decoherence is exact), and the residual ``I - sum R_a`` is
    added to the lowest-indexed surviving record; it annihilates ``psi``
    because ``psi`` lies in the span of the branches.
    """
    dm = decoherence_matrix(state, hset)
    verdict = is_medium_decoherent(dm, tol)
    if not verdict:
        w = verdict.witness
        raise NotDecoherent(f"|D{w.row, w.col}| = {w.magnitude:.3e} exceeds {tol.eps_dec:.1e}")
    branches = hset.branch_vectors(state)
    norms = np.linalg.norm(branches, axis=1)
    live = np.flatnonzero(norms > tol.eps_rec)
    if live.size == 0:
        raise AllBranchesNull("every branch vector vanishes; the state is annihilated")
    x = (branches[live] / norms[live, None]).T
    u, _, vh = np.linalg.svd(x, full_matrices=False)
    q = u @ vh
    d = hset.dim
    mats = [np.zeros((d, d), dtype=complex) for _ in hset.indices]
    for col, row in enumerate(live):
        mats[row] = np.outer(q[:, col], q[:, col].conj())
    mats[live[0]] = mats[live[0]] + (np.eye(d) - q @ q.conj().T)
    members = [validate_projector(0.5 * (m + m.conj().T), tol) for m in mats]
    labels = [f"R[{hset.label(a)}]" for a in hset.indices]
    family = validate_family(members, tol, labels)
    t_r = hset.final_time + 1.0
    return RecordFamily(family, t_r, tuple(hset.indices))


def classify(
    state: StateVector,
    hset,
    records: RecordFamily | None = None,
    tol: ToleranceConfig = DEFAULT_TOLERANCE,
) -> Classification:
    """Place a set in the hierarchy strong records => recorded => decoherent-probabilities."""
    ep = extended_probabilities(state, hset, tol)
    dm = decoherence_matrix(state, hset)
    dec = is_medium_decoherent(dm, tol)
    witnesses = {"medium_decoherent": dec.witness, "ep_in_range": Witness(*_ep_witness(ep))}
    recorded = strong = None
    source = None
    if records is None and dec:
        records = canonical_records(state, hset, tol)
        source = "canonical"
    elif records is not None:
        source = "supplied"
    if records is not None:
        rec = is_recorded(correlation_matrix(state, hset, records), tol)
        st = strong_record_check(state, hset, records, tol)
        recorded, strong = rec.holds, st.holds
        witnesses["recorded"] = rec.witness
        witnesses["strongly_recorded"] = st.witness
        if strong:
            # strong records at eps bound both off-diagonal measures by 2 eps
            wide = tol.with_epsilon(2 * tol.eps_rec)
            if not is_recorded(correlation_matrix(state, hset, records), wide) or not is_medium_decoherent(dm, wide):
                raise HistlabError("hierarchy violated: strong records without recording/decoherence")
    return Classification(
        strongly_recorded=strong,
        recorded=recorded,
        medium_decoherent=dec.holds,
        ep_in_range=not ep.extended,
        witnesses=witnesses,
        records_source=source,
        tolerance=tol,
        extended=ep,
    )


def _ep_witness(ep: ProbabilityTable):
    key, value = ep.worst()
    return key, key, value


def retrodict(
    state: StateVector,
    hset: HistorySet,
    pd_value: int,
    present_slot: int = -1,
    records: RecordFamily | None = None,
    tol: ToleranceConfig = DEFAULT_TOLERANCE,
) -> ProbabilityTable:
    """Probabilities of the other slots' alternatives given the present datum.

    The present slot's family plays the role of ``{R_pd, I - R_pd, ...}``
    and ``pd_value`` picks the observed member. The result is keyed by the
    history index with the present slot removed.

    Raises
    ------
    NotRecorded, ZeroEvidence
    """
    n = len(hset.schedule)
    slot = present_slot % n
    if not 0 <= pd_value < hset.shape[slot]:
        raise ScheduleMismatch(f"value {pd_value} out of range for slot {slot}")
    joint = history_probabilities(state, hset, records, tol)
    evidence = sum(p for a, p in joint.items() if a[slot] == pd_value)
    if evidence <= tol.eps_rec:
        raise ZeroEvidence(f"present datum has probability {evidence:.3e}")
    out = {}
    for a, p in joint.items():
        if a[slot] == pd_value:
            past = a[:slot] + a[slot + 1 :]
            out[past] = out.get(past, 0.0) + p / evidence
    return ProbabilityTable(out, extended=False)


# -- graining, composition, incompatibility ----------------------------------


def coarse_grain_records(records: RecordFamily, cset: CoarseHistorySet, tol: ToleranceConfig | None = None) -> RecordFamily:
    """Records of a coarse-grained set: ``R_block = sum of the block's records``."""
    tol = tol or cset.tol
    pos = records.aligned_positions()
    members, labels, alignment = [], [], []
    for i, block in enumerate(cset.partition.blocks):
        m = sum(records.family.members[pos[a]].matrix for a in block)
        members.append(validate_projector(m, tol))
        labels.append("+".join(records.family.labels[pos[a]] for a in sorted(block)))
        alignment.append((i,))
    for i, a in enumerate(records.alignment):
        if a is None:
            members.append(records.family.members[i])
            labels.append(records.family.labels[i])
            alignment.append(None)
    family = validate_family(members, tol, labels)
    return RecordFamily(family, records.record_time, tuple(alignment), records.reference_time)


def tensor_compose_records(
    rec_a: RecordFamily,
    set_a: HistorySet,
    rec_b: RecordFamily,
    set_b: HistorySet,
    tol: ToleranceConfig | None = None,
) -> RecordFamily:
    """Records ``kron(R^a, R^b)`` aligned with the composite of :func:`tensor_compose`."""
    tol = tol or set_a.tol
    if None in rec_a.alignment or None in rec_b.alignment:
        raise AlignmentIncomplete("residual records cannot be composed")
    if not np.isclose(rec_a.record_time, rec_b.record_time):
        raise ScheduleMismatch("record times differ")
    fa = _record_family_at_time(rec_a, set_a)
    fb = _record_family_at_time(rec_b, set_b)
    b_shape = set_b.shape
    members, labels, alignment = [], [], []
    for pa, la_, aa in zip(fa.members, fa.labels, rec_a.alignment):
        for pb, lb, ab in zip(fb.members, fb.labels, rec_b.alignment):
            members.append(Projector(np.kron(pa.matrix, pb.matrix), pa.rank * pb.rank))
            labels.append(f"{la_}*{lb}")
            alignment.append(tuple(x * n + y for x, y, n in zip(aa, ab, b_shape)))
    family = validate_family(members, tol, labels)
    return RecordFamily(family, rec_a.record_time, tuple(alignment))


def product_fine_graining(set_a: HistorySet, set_b: HistorySet, tol: ToleranceConfig | None = None) -> HistorySet:
    """Slot-by-slot intersection of two sets' alternatives.

    Slot k of the result holds ``P^a_i(t_k) P^b_j(t_k)`` for every pair,
    ``i`` slowest. Both sets must share Hamiltonian and slot times, and
    their families must commute slot by slot so the products are
    projectors.
    """
    tol = tol or set_a.tol
    if set_a.dim != set_b.dim:
        raise DimensionMismatch(f"dims differ ({set_a.dim} vs {set_b.dim})")
    if len(set_a.schedule) != len(set_b.schedule):
        raise ScheduleMismatch("schedules have different lengths")
    if max_norm(set_a.hamiltonian.matrix - set_b.hamiltonian.matrix) > tol.eps_herm:
        raise ScheduleMismatch("sets use different Hamiltonians")
    schedule = []
    for k, (ta, tb) in enumerate(zip(set_a.times, set_b.times)):
        if not np.isclose(ta, tb, rtol=1e-12, atol=1e-12):
            raise ScheduleMismatch(f"slot {k} times differ ({ta} vs {tb})", location=k)
        fa, fb = set_a.heisenberg[k], set_b.heisenberg[k]
        members, labels = [], []
        for pa, la_ in zip(fa.members, fa.labels):
            for pb, lb in zip(fb.members, fb.labels):
                prod = pa.matrix @ pb.matrix
                comm = max_norm(prod - pb.matrix @ pa.matrix)
                if comm > tol.eps_proj:
                    raise ScheduleMismatch(
                        f"slot {k}: members {la_!r} and {lb!r} do not commute ({comm:.3e})", location=k
                    )
                members.append(validate_projector(0.5 * (prod + prod.conj().T), tol))
                labels.append(la_ if la_ == lb else f"{la_}&{lb}")
        schedule.append(ScheduledFamily(validate_family(members, tol, labels), ta))
    return build_history_set(set_a.hamiltonian, schedule, tol)


def incompatible(set_a: HistorySet, set_b: HistorySet, state: StateVector, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> bool:
    """True when the product fine graining of two recorded sets is not recorded.

    Only the slot-wise product fine graining is examined; other common
    fine grainings are not searched.
    """
    for name, s in (("first", set_a), ("second", set_b)):
        if not is_medium_decoherent(decoherence_matrix(state, s), tol):
            raise NotRecorded(f"{name} set does not decohere; incompatibility is defined for recorded sets")
    fine = product_fine_graining(set_a, set_b, tol)
    # canonical records exist exactly when the fine graining decoheres, and
    # then they are strong, hence recording
    return not is_medium_decoherent(decoherence_matrix(state, fine), tol)
