"""
Dense complex linear algebra for finite-dimensional closed systems.

States, Hermitian operators, projectors and exhaustive families of
exclusive projectors, together with Heisenberg-picture evolution
``P(t') = exp(iH(t'-t)) P(t) exp(-iH(t'-t))``.

All checks use the max-absolute-entry norm. Every tolerance lives in
:class:`ToleranceConfig`; nothing in this module has a hard-coded
epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg as la
from scipy.sparse.csgraph import connected_components

from histlab.errors import (
    DimensionMismatch,
    EigendecompositionFailure,
    NotExclusive,
    NotExhaustive,
    NotHermitian,
    NotIdempotent,
    NotNormalized,
    ValidationError,
)

__all__ = [
    "ToleranceConfig",
    "DEFAULT_TOLERANCE",
    "StateVector",
    "HermitianOperator",
    "Projector",
    "ProjectorFamily",
    "max_norm",
    "make_state",
    "validate_hermitian",
    "validate_projector",
    "validate_family",
    "projector_onto",
    "conjugate",
    "basis_projector",
    "unitary_of",
    "evolve_projector",
    "generator_of",
]


@dataclass(frozen=True)
class ToleranceConfig:
    """Named thresholds for every approximate equality the library checks.

    eps_norm : state normalization
    eps_herm : Hermiticity
    eps_proj : idempotency, exclusivity, exhaustiveness, completeness
    eps_rec  : largest off-diagonal correlation still counted as a record
    eps_dec  : largest off-diagonal decoherence-functional entry still
               counted as decoherent
    """

    eps_norm: float = 1e-12
    eps_herm: float = 1e-12
    eps_proj: float = 1e-10
    eps_rec: float = 1e-8
    eps_dec: float = 1e-8

    def __post_init__(self):
        for name in ("eps_norm", "eps_herm", "eps_proj", "eps_rec", "eps_dec"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError(f"{name} must be nonnegative, got {value!r}")

    def with_epsilon(self, eps: float) -> "ToleranceConfig":
        """Same config with both the record and decoherence thresholds set to ``eps``."""
        return replace(self, eps_rec=eps, eps_dec=eps)

    def scaled(self, factor: float) -> "ToleranceConfig":
        return ToleranceConfig(*(factor * v for v in self.as_tuple()))

    def as_tuple(self) -> tuple[float, ...]:
        return (self.eps_norm, self.eps_herm, self.eps_proj, self.eps_rec, self.eps_dec)


DEFAULT_TOLERANCE = ToleranceConfig()


def max_norm(m) -> float:
    """Largest absolute entry; 0 for empty input."""
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a @ b``, in real arithmetic when both factors have zero imaginary part."""
    if np.iscomplexobj(a) and not np.any(a.imag) and np.iscomplexobj(b) and not np.any(b.imag):
        return (np.ascontiguousarray(a.real) @ np.ascontiguousarray(b.real)).astype(complex)
    return a @ b


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def is_zero(self) -> bool:
        return not np.any(self.matrix)

    @cached_property
    def blocks(self) -> tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]:
        """Eigendecomposition per connected block of the sparsity pattern.

        Each entry is ``(indices, w, v)`` with ``H[ix_(indices, indices)] = v diag(w) v^dag``.
        Block-diagonal Hamiltonians (controlled couplings, uncoupled
        subsystems) diagonalize far faster this way.
        """
        n, comp = connected_components(np.abs(self.matrix) > 0, directed=False)
        out = []
        for c in range(n):
            idx = np.flatnonzero(comp == c)
            if len(idx) == 1:
                out.append((idx, self.matrix[idx, idx].real, np.ones((1, 1), dtype=complex)))
                continue
            try:
                w, v = np.linalg.eigh(self.matrix[np.ix_(idx, idx)])
            except np.linalg.LinAlgError as exc:
                raise EigendecompositionFailure(str(exc)) from exc
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
                raise EigendecompositionFailure("non-finite eigendecomposition")
            out.append((idx, w, v))
        return tuple(out)

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        w = np.empty(self.dim)
        v = np.zeros((self.dim, self.dim), dtype=complex)
        for idx, bw, bv in self.blocks:
            w[idx] = bw
            v[np.ix_(idx, idx)] = bv
        return w, v

    @classmethod
    def zero(cls, dim: int) -> "HermitianOperator":
        return cls(_frozen(np.zeros((dim, dim))))


@dataclass(frozen=True, eq=False)
class Projector:
    matrix: np.ndarray
    rank: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True, eq=False)
class ProjectorFamily:
    members: tuple[Projector, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(len(self.members))))
        if len(self.labels) != len(self.members):
            raise ValueError("one label per member required")

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i) -> Projector:
        return self.members[i]

    def index_of(self, label: str) -> int:
        """Position of a member given its label or its decimal index."""
        if label in self.labels:
            return self.labels.index(label)
        try:
            i = int(label)
        except ValueError:
            raise KeyError(f"no member labelled {label!r}; labels are {list(self.labels)}") from None
        if not 0 <= i < len(self.members):
            raise KeyError(f"member index {i} out of range")
        return i

    @cached_property
    def stacked(self) -> np.ndarray:
        return np.stack([p.matrix for p in self.members])


def _square(m, what: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{what} must be a square matrix, got shape {m.shape}")
    return m


def make_state(amplitudes, tol: ToleranceConfig = DEFAULT_TOLERANCE, normalize: bool = False) -> StateVector:
    """Build a :class:`StateVector`, optionally normalizing first."""
    a = np.asarray(amplitudes, dtype=complex).ravel()
    if a.size == 0:
        raise DimensionMismatch("state must have positive dimension")
    n = np.linalg.norm(a)
    if normalize:
        if n == 0:
            raise NotNormalized("cannot normalize the zero vector", magnitude=1.0)
        a = a / n
    elif abs(n - 1.0) > tol.eps_norm:
        raise NotNormalized(f"state norm is {n!r}, expected 1", magnitude=abs(n - 1.0))
    return StateVector(_frozen(a))


def validate_hermitian(m, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> HermitianOperator:
    m = _square(m, "Hamiltonian")
    err = max_norm(m - m.conj().T)
    if err > tol.eps_herm:
        raise NotHermitian(f"operator is not Hermitian (max |M - M^dag| = {err:.3e})", magnitude=err)
    return HermitianOperator(_frozen(0.5 * (m + m.conj().T)))


def validate_projector(m, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> Projector:
    """Check Hermiticity then idempotency; cache the rank as the rounded trace.

    Raises
    ------
    NotHermitian, NotIdempotent
        With ``magnitude`` set to the largest violating entry.
    """
    m = _square(m, "projector")
    herm = max_norm(m - m.conj().T)
    if herm > tol.eps_herm:
        raise NotHermitian(f"projector is not Hermitian (max |P - P^dag| = {herm:.3e})", magnitude=herm)
    idem = max_norm(matmul(m, m) - m)
    if idem > tol.eps_proj:
        raise NotIdempotent(f"matrix is not idempotent (max |P P - P| = {idem:.3e})", magnitude=idem)
    # idempotent and Hermitian, so the trace is within roundoff of an integer
    rank = int(round(float(np.trace(m).real)))
    return Projector(_frozen(m), rank)


def _suspect_pairs(members: Sequence[Projector], eps: float):
    """Pairs (a, b), a < b, that might violate ``|P_a P_b|_max <= eps``.

    For Hermitian members ``|P_a P_b|_F^2 = tr(P_a P_b)``, an O(d^2)
    quantity bounding the max-norm from above, so pairs under ``eps``
    there need no matrix product.
    """
    flat = np.stack([p.matrix.ravel() for p in members])
    frob = np.sqrt(np.clip((flat @ flat.conj().T).real, 0.0, None))
    a_idx, b_idx = np.nonzero(np.triu(frob > eps, k=1))
    return list(zip(a_idx.tolist(), b_idx.tolist()))


def validate_family(
    members: Sequence[Projector],
    tol: ToleranceConfig = DEFAULT_TOLERANCE,
    labels: Sequence[str] | None = None,
) -> ProjectorFamily:
    """Check that ``members`` are pairwise exclusive and sum to the identity."""
    members = tuple(members)
    if not members:
        raise NotExhaustive("empty family cannot be exhaustive", magnitude=1.0, violations=("NotExhaustive",))
    dim = members[0].dim
    for i, p in enumerate(members):
        if p.dim != dim:
            raise DimensionMismatch(f"member {i} has dim {p.dim}, expected {dim}", location=i)

    violations = []
    worst_pair, worst = None, 0.0
    for a, b in _suspect_pairs(members, tol.eps_proj):
        v = max_norm(matmul(members[a].matrix, members[b].matrix))
        if v > worst:
            worst_pair, worst = (a, b), v
    if worst > tol.eps_proj:
        violations.append("NotExclusive")
    total = sum(p.matrix for p in members)
    gap = max_norm(total - np.eye(dim))
    if gap > tol.eps_proj:
        violations.append("NotExhaustive")

    if "NotExclusive" in violations:
        msg = f"members {worst_pair[0]} and {worst_pair[1]} are not exclusive (max |P_a P_b| = {worst:.3e})"
        if "NotExhaustive" in violations:
            msg += f"; family is also not exhaustive (max |sum P - I| = {gap:.3e})"
        raise NotExclusive(msg, magnitude=worst, location=worst_pair, violations=violations)
    if violations:
        raise NotExhaustive(
            f"family is not exhaustive (max |sum P - I| = {gap:.3e})", magnitude=gap, violations=violations
        )
    return ProjectorFamily(members, tuple(labels) if labels is not None else ())


def projector_onto(vectors, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> Projector:
    """Orthogonal projector onto the span of the given column vectors (or a single vector)."""
    v = np.asarray(vectors, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[1] == 0:
        return Projector(_frozen(np.zeros((v.shape[0], v.shape[0]))), 0)
    q, r = np.linalg.qr(v)
    keep = np.abs(np.diag(r)) > max(tol.eps_norm, 1e-14) * max(1.0, np.abs(r).max())
    q = q[:, keep]
    return validate_projector(q @ q.conj().T, tol)


def basis_projector(dim: int, indices) -> Projector:
    m = np.zeros((dim, dim), dtype=complex)
    idx = list(indices)
    m[idx, idx] = 1.0
    return Projector(_frozen(m), len(set(idx)))


def _block_unitaries(H: HermitianOperator, dt: float):
    """``(indices, u)`` per block of ``exp(i H dt)``; all 1x1 blocks share one entry of phases.

    A purely imaginary ``H`` has a real propagator, so the roundoff
    imaginary part is dropped there.
    """
    real = not np.any(H.matrix.real)
    singles, out = [], []
    for idx, w, v in H.blocks:
        if len(idx) == 1:
            singles.append((idx[0], w[0]))
        else:
            ub = (v * np.exp(1j * w * dt)) @ v.conj().T
            out.append((idx, ub.real.astype(complex) if real else ub))
    if singles:
        idx, w = (np.array(x) for x in zip(*singles))
        out.append((idx, np.exp(1j * w * dt)))
    return out


def unitary_of(H: HermitianOperator, dt: float) -> np.ndarray:
    """``exp(i H dt)`` via the Hermitian eigendecomposition of ``H``."""
    if dt == 0 or H.is_zero:
        return np.eye(H.dim, dtype=complex)
    u = np.zeros((H.dim, H.dim), dtype=complex)
    for idx, ub in _block_unitaries(H, dt):
        if ub.ndim == 1:
            u[idx, idx] = ub
        else:
            u[np.ix_(idx, idx)] = ub
    return u


def conjugate(m, H: HermitianOperator, dt: float) -> np.ndarray:
    """``exp(i H dt) m exp(-i H dt)``, multiplied block by block."""
    m = np.asarray(m, dtype=complex)
    if dt == 0 or H.is_zero:
        return m.copy()
    blocks = _block_unitaries(H, dt)
    left = np.empty_like(m)
    for idx, ub in blocks:
        left[idx] = ub[:, None] * m[idx] if ub.ndim == 1 else matmul(ub, m[idx])
    out = np.empty_like(m)
    for idx, ub in blocks:
        out[:, idx] = left[:, idx] * ub.conj() if ub.ndim == 1 else matmul(left[:, idx], ub.conj().T)
    return out


def evolve_projector(
    P: Projector,
    H: HermitianOperator,
    t_from: float,
    t_to: float,
    tol: ToleranceConfig = DEFAULT_TOLERANCE,
) -> Projector:
    """Heisenberg-evolve ``P`` from ``t_from`` to ``t_to``."""
    if P.dim != H.dim:
        raise DimensionMismatch(f"projector dim {P.dim} != Hamiltonian dim {H.dim}")
    dt = t_to - t_from
    if dt == 0 or H.is_zero:
        return P
    m = conjugate(P.matrix, H, dt)
    m = 0.5 * (m + m.conj().T)
    evolved = validate_projector(m, tol)
    if evolved.rank != P.rank:
        raise ValidationError(f"evolution changed rank {P.rank} -> {evolved.rank}")
    return evolved


def generator_of(U, dt: float = 1.0, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> HermitianOperator:
    """Hermitian ``H`` with ``exp(-i H dt) = U`` (principal branch).

    ``U`` is normal, so its complex Schur form is diagonal and the Schur
    vectors are orthonormal even inside degenerate eigenspaces.
    """
    U = _square(U, "unitary")
    unit = max_norm(U @ U.conj().T - np.eye(U.shape[0]))
    if unit > 1e-10:
        raise ValidationError(f"matrix is not unitary (max |U U^dag - I| = {unit:.3e})", magnitude=unit)
    t, z = la.schur(U, output="complex")
    phases = np.angle(np.diag(t))
    h = (z * (-phases / dt)) @ z.conj().T
    return validate_hermitian(0.5 * (h + h.conj().T), replace(tol, eps_herm=max(tol.eps_herm, 1e-9)))
