"""
Built-in models with machine-checked expectations.

Each constructor returns a :class:`ModelBundle` holding a state, a history
set, optional records, and a list of :class:`Expectation` entries. Every
expectation names a quantity from :data:`QUANTITIES`; :func:`verify`
recomputes all of them through :mod:`histlab.measures`.

Models
------
three_box          particle in one of three boxes, H = 0
two_slit           position bins, Gaussian slit packets, free propagation
qubit_trine        one qubit, two non-commuting times, extended probability -1/8
spin_environment   system qubit whose z value is imprinted on N environment qubits
imaginary_overlap  recorded but not decoherent: purely imaginary branch overlap
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from histlab.errors import DimensionGuard, PacketOverflow, ParamOutOfRange
from histlab.hilbert import (
    DEFAULT_TOLERANCE,
    HermitianOperator,
    StateVector,
    ToleranceConfig,
    basis_projector,
    make_state,
    projector_onto,
    unitary_of,
    validate_family,
    validate_hermitian,
    validate_projector,
)
from histlab.histories import HistorySet, ScheduledFamily, build_history_set
from histlab import measures
from histlab.measures import RecordFamily, make_records

__all__ = [
    "Expectation",
    "ModelBundle",
    "QUANTITIES",
    "verify",
    "three_box",
    "two_slit",
    "screen_pattern",
    "scan_two_slit",
    "qubit_trine",
    "spin_environment",
    "spin_environment_overlap",
    "imaginary_overlap",
    "BUILTINS",
]


@dataclass(frozen=True)
class Expectation:
    quantity: str
    expected: float
    provenance: str
    tolerance: float = 1e-10
    params: dict = field(default_factory=dict)
    relation: str = "=="  # one of "==", "<=", ">=", "<", ">"


@dataclass(frozen=True, eq=False)
class ModelBundle:
    name: str
    state: StateVector
    set: HistorySet
    records: RecordFamily | None = None
    expectations: tuple[Expectation, ...] = ()
    params: dict = field(default_factory=dict)
    tol: ToleranceConfig = DEFAULT_TOLERANCE


# -- quantities ---------------------------------------------------------------


def _max_offdiag_d(b: ModelBundle) -> float:
    w = measures.decoherence_matrix(b.state, b.set).worst_off_diagonal()
    return 0.0 if w is None else w.magnitude


def _max_offdiag_r(b: ModelBundle) -> float:
    w = measures.correlation_matrix(b.state, b.set, b.records).worst_off_diagonal()
    return 0.0 if w is None else w.magnitude


def _retrodiction(b: ModelBundle, pd_value, past, present_slot=-1, eps=None) -> float:
    tol = b.tol if eps is None else b.tol.with_epsilon(eps)
    table = measures.retrodict(b.state, b.set, pd_value, present_slot, b.records, tol)
    return table[tuple(past)]


def _ep(b: ModelBundle, index) -> float:
    return measures.extended_probabilities(b.state, b.set, b.tol)[tuple(index)]


def _min_ep(b: ModelBundle) -> float:
    return min(measures.extended_probabilities(b.state, b.set, b.tol).values.values())


def _ep_sum(b: ModelBundle) -> float:
    return measures.extended_probabilities(b.state, b.set, b.tol).total


def _corr_sum(b: ModelBundle) -> float:
    return measures.correlation_matrix(b.state, b.set, b.records).normalization


def _flag(name):
    def compute(b: ModelBundle, eps=None) -> float:
        tol = b.tol if eps is None else b.tol.with_epsilon(eps)
        c = measures.classify(b.state, b.set, b.records, tol)
        return float(bool(c.flags[name]))
    compute.__name__ = f"flag_{name}"
    return compute


def _visibility(b: ModelBundle) -> float:
    return screen_pattern(b.state, b.set)["visibility"]


def _fringe_ratio(b: ModelBundle) -> float:
    return screen_pattern(b.state, b.set)["fringe_ratio"]


QUANTITIES: dict[str, Callable[..., float]] = {
    "max_offdiag_decoherence": _max_offdiag_d,
    "max_offdiag_correlation": _max_offdiag_r,
    "retrodiction": _retrodiction,
    "extended_probability": _ep,
    "min_extended_probability": _min_ep,
    "extended_probability_sum": _ep_sum,
    "correlation_sum": _corr_sum,
    "medium_decoherent": _flag("medium_decoherent"),
    "recorded": _flag("recorded"),
    "strongly_recorded": _flag("strongly_recorded"),
    "ep_in_range": _flag("ep_in_range"),
    "fringe_visibility": _visibility,
    "fringe_ratio": _fringe_ratio,
}

_RELATIONS = {
    "==": lambda got, exp, tol: abs(got - exp) <= tol,
    "<=": lambda got, exp, tol: got <= exp + tol,
    ">=": lambda got, exp, tol: got >= exp - tol,
    "<": lambda got, exp, tol: got < exp,
    ">": lambda got, exp, tol: got > exp,
}


@dataclass(frozen=True)
class CheckResult:
    expectation: Expectation
    value: float
    passed: bool


def verify(bundle: ModelBundle) -> list[CheckResult]:
    """Recompute every expectation of ``bundle``."""
    results = []
    for e in bundle.expectations:
        got = float(QUANTITIES[e.quantity](bundle, **e.params))
        results.append(CheckResult(e, got, bool(_RELATIONS[e.relation](got, e.expected, e.tolerance))))
    return results


# -- three boxes --------------------------------------------------------------

_THREE_BOX_VARIANTS = ("A_set", "B_set", "fine_AB")


def _three_box_parts():
    s = 1 / math.sqrt(3)
    state = make_state([s, s, s])
    phi = np.array([s, s, -s])
    p_phi = validate_projector(np.outer(phi, phi.conj()))
    not_phi = validate_projector(np.eye(3) - p_phi.matrix)
    fam = {
        "A": validate_family([basis_projector(3, [0]), basis_projector(3, [1, 2])], labels=["A", "~A"]),
        "B": validate_family([basis_projector(3, [1]), basis_projector(3, [0, 2])], labels=["B", "~B"]),
        "Phi": validate_family([p_phi, not_phi], labels=["Φ", "~Φ"]),
    }
    return state, fam


def three_box(variant: str = "A_set") -> ModelBundle:
    """Three boxes, ``psi = (A + B + C)/sqrt 3``, present datum ``Phi = (A + B - C)/sqrt 3``.

    ``A_set``: {A, ~A} then {Phi, ~Phi}. ``B_set``: same with B.
    ``fine_AB``: {B, ~B}, then {A, ~A}, then {Phi, ~Phi}; chains
    ``P_Phi P_A P_B`` etc. with the latest projector leftmost.
    """
    if variant not in _THREE_BOX_VARIANTS:
        raise ParamOutOfRange(f"variant must be one of {_THREE_BOX_VARIANTS}, got {variant!r}")
    state, fam = _three_box_parts()
    H = HermitianOperator.zero(3)
    if variant == "fine_AB":
        schedule = [
            ScheduledFamily(fam["B"], 1.0, name="B"),
            ScheduledFamily(fam["A"], 2.0, name="A"),
            ScheduledFamily(fam["Phi"], 3.0, name="present"),
        ]
        exps = (
            Expectation("max_offdiag_decoherence", 1 / 9, "DERIVED", 1e-12),
            Expectation("medium_decoherent", 0.0, "STATED"),
        )
    else:
        box = variant[0]
        schedule = [ScheduledFamily(fam[box], 1.0, name=box), ScheduledFamily(fam["Phi"], 2.0, name="present")]
        exps = (
            Expectation("retrodiction", 1.0, "STATED", 1e-12, {"pd_value": 0, "past": (0,)}),
            Expectation("retrodiction", 0.0, "STATED", 1e-12, {"pd_value": 0, "past": (1,)}),
            Expectation("max_offdiag_decoherence", 0.0, "STATED", 1e-12),
            Expectation("medium_decoherent", 1.0, "STATED"),
        )
    hset = build_history_set(H, schedule)
    return ModelBundle(f"three-box-{variant}", state, hset, None, exps, {"variant": variant})


# -- two slits ----------------------------------------------------------------

# Chosen by scan_two_slit over bins in {32, 48, 64}, even slit separations,
# widths {0.75, 1, 1.5, 2} and times {2, ..., 64}: at 64 bins these give
# min extended probability ~ -3.6e-3 and a central fringe ratio ~ 63.
TWO_SLIT_DEFAULTS = {"bins": 64, "packet_width": 0.75, "propagation_time": 16.0}


def _slit_positions(bins: int, slit_u, slit_l) -> tuple[int, int]:
    if slit_u is None:
        slit_u = (3 * bins) // 8
    if slit_l is None:
        slit_l = (5 * bins) // 8
    return int(slit_u), int(slit_l)


def _packet(bins: int, center: int, width: float):
    half = int(math.ceil(4 * width))
    lo, hi = center - half, center + half
    if lo < 0 or hi >= bins:
        raise PacketOverflow(f"packet at {center} with half-width {half} leaves [0, {bins})")
    x = np.arange(bins)
    amp = np.where(np.abs(x - center) <= half, np.exp(-((x - center) ** 2) / (4 * width**2)), 0.0)
    return amp / np.linalg.norm(amp), list(range(lo, hi + 1))


def _free_hamiltonian(bins: int) -> np.ndarray:
    f = np.fft.fft(np.eye(bins), norm="ortho")
    k = 2 * np.pi * np.fft.fftfreq(bins)
    return f.conj().T @ np.diag(k**2 / 2) @ f


def two_slit(
    bins: int = 64,
    slit_u: int | None = None,
    slit_l: int | None = None,
    packet_width: float = 0.75,
    with_record: bool = False,
    propagation_time: float = 16.0,
) -> ModelBundle:
    """Two slits on a ring of ``bins`` position bins.

    At ``t1 = 0`` the state is an equal superposition of two Gaussian
    packets (probability density of width ``packet_width`` bins,
    truncated at 4 widths) centred on the slits. Slit alternatives are
    ``{U, L, else}`` where U and L project onto the packet supports. The
    free Hamiltonian ``k^2 / 2`` (diagonal in the discrete Fourier basis)
    carries the packets to the screen at ``t2 = propagation_time``, where
    the alternatives are the single bins.

    With ``with_record`` a path qubit is tensored on (position first) and
    set to 0 on the U packet and 1 on the L packet; the shipped records
    read screen bin and path qubit together.
    """
    if bins < 8:
        raise ParamOutOfRange(f"need at least 8 bins, got {bins}")
    if not propagation_time > 0:
        raise ParamOutOfRange("propagation_time must be positive")
    su, sl = _slit_positions(bins, slit_u, slit_l)
    pu, win_u = _packet(bins, su, packet_width)
    pl, win_l = _packet(bins, sl, packet_width)
    if set(win_u) & set(win_l):
        raise PacketOverflow(f"slit packets at {su} and {sl} overlap")
    rest = sorted(set(range(bins)) - set(win_u) - set(win_l))

    q = 2 if with_record else 1
    iq = np.eye(q)
    H = validate_hermitian(np.kron(_free_hamiltonian(bins), iq))
    dim = bins * q

    def lift(p):
        return validate_projector(np.kron(p.matrix, iq))

    slits = validate_family(
        [lift(basis_projector(bins, win_u)), lift(basis_projector(bins, win_l)), lift(basis_projector(bins, rest))],
        labels=["U", "L", "else"],
    )
    screen = validate_family([lift(basis_projector(bins, [j])) for j in range(bins)], labels=[str(j) for j in range(bins)])
    t2 = float(propagation_time)
    hset = build_history_set(
        H, [ScheduledFamily(slits, 0.0, name="slits"), ScheduledFamily(screen, t2, reference_time=0.0, name="screen")]
    )

    if with_record:
        amps = (np.kron(pu, [1.0, 0.0]) + np.kron(pl, [0.0, 1.0])) / math.sqrt(2)
    else:
        amps = (pu + pl) / math.sqrt(2)
    state = make_state(amps, normalize=False)

    records = None
    params = {
        "bins": bins, "slit_u": su, "slit_l": sl, "packet_width": packet_width,
        "with_record": with_record, "propagation_time": t2,
    }
    if with_record:
        # R(U|L, j) reads screen bin j at t2 together with the path qubit. Its
        # Heisenberg operator at t_r = t2 + 1 is the bin-and-path projector
        # evolved by t2, so it is given as that diagonal projector at
        # reference time t_r - t2.
        members, labels, alignment = [], [], []
        for s, path in enumerate(["U", "L", "else"]):
            for j in range(bins):
                members.append(basis_projector(dim, [2 * j + s] if s < 2 else []))
                labels.append(f"{path}@{j}")
                alignment.append((s, j))
        records = make_records(validate_family(members, labels=labels), t2 + 1.0, alignment, reference_time=1.0)
        exps = (
            Expectation("medium_decoherent", 1.0, "DERIVED", params={"eps": 1e-10}),
            Expectation("recorded", 1.0, "TRIVIAL", params={"eps": 1e-10}),
            Expectation("fringe_visibility", 1e-10, "DERIVED", 0.0, relation="<="),
            Expectation("ep_in_range", 1.0, "DERIVED"),
            Expectation("extended_probability_sum", 1.0, "TRIVIAL"),
        )
    else:
        exps = (
            Expectation("medium_decoherent", 0.0, "DERIVED"),
            Expectation("min_extended_probability", 0.0, "DERIVED", 0.0, relation="<"),
            Expectation("fringe_ratio", 10.0, "DERIVED", 0.0, relation=">"),
            Expectation("extended_probability_sum", 1.0, "TRIVIAL"),
        )
    name = "two-slit-recorded" if with_record else "two-slit"
    return ModelBundle(name, state, hset, records, exps, params)


def screen_pattern(state: StateVector, hset) -> dict:
    """Screen intensity and per-slit extended probabilities of a two-time set.

    Slot 0 is the slit family (U first, L second), slot 1 the screen bins.
    ``direct`` is the sum of branch probabilities without interference;
    ``visibility`` is the largest |intensity - direct| relative to the
    peak of ``direct``. ``fringe_ratio`` is max/min intensity over the
    bins where ``direct`` is at least half its peak.
    """
    n_s, n_j = hset.shape
    ep = measures.extended_probabilities(state, hset)
    branches = hset.branch_vectors(state).reshape(n_s, n_j, -1)
    direct = np.einsum("sjd,sjd->j", branches.conj(), branches).real
    wp = np.array([[ep[(s, j)] for j in range(n_j)] for s in range(n_s)])
    intensity = wp.sum(axis=0)
    visibility = float(np.max(np.abs(intensity - direct)) / np.max(direct))
    core = direct >= 0.5 * direct.max()
    lo = intensity[core].min()
    ratio = float(intensity[core].max() / lo) if lo > 0 else math.inf
    return {
        "intensity": intensity,
        "ep_upper": wp[0],
        "ep_lower": wp[1],
        "direct": direct,
        "visibility": visibility,
        "fringe_ratio": ratio,
    }


def scan_two_slit(
    bins_options=(32, 48, 64),
    widths=(0.75, 1.0, 1.5, 2.0),
    times=(2.0, 4.0, 8.0, 16.0, 32.0, 64.0),
    min_negativity: float = 1e-3,
    min_ratio: float = 10.0,
) -> list[dict]:
    """Parameter points whose no-record model shows both negativity and fringes.

    Slits are placed symmetrically about the ring centre at every even
    separation. This is the procedure that fixed :data:`TWO_SLIT_DEFAULTS`.
    """
    hits = []
    for m in bins_options:
        for sep in range(6, m // 2, 2):
            su = m // 2 - sep // 2
            for w in widths:
                for t in times:
                    try:
                        b = two_slit(m, su, su + sep, w, False, t)
                    except PacketOverflow:
                        continue
                    pat = screen_pattern(b.state, b.set)
                    neg = min(pat["ep_upper"].min(), pat["ep_lower"].min())
                    if neg < -min_negativity and pat["fringe_ratio"] > min_ratio:
                        hits.append({"bins": m, "slit_u": su, "slit_l": su + sep, "packet_width": w,
                                     "propagation_time": t, "min_ep": float(neg),
                                     "fringe_ratio": pat["fringe_ratio"]})
    return hits


# -- qubit trine --------------------------------------------------------------


def _bloch_xz(angle: float) -> np.ndarray:
    return np.array([math.cos(angle / 2), math.sin(angle / 2)], dtype=complex)


def qubit_trine() -> ModelBundle:
    """``psi = |0>``; Bloch x-z directions 2pi/3 at t1 and 4pi/3 at t2.

    ``wp(+, +) = cos(2pi/3) cos(pi/3) cos(pi/3) = -1/8``.
    """
    fams = []
    for angle in (2 * math.pi / 3, 4 * math.pi / 3):
        v = _bloch_xz(angle)
        p = projector_onto(v)
        fams.append(validate_family([p, validate_projector(np.eye(2) - p.matrix)], labels=["+", "-"]))
    hset = build_history_set(
        HermitianOperator.zero(2), [ScheduledFamily(fams[0], 1.0, name="a"), ScheduledFamily(fams[1], 2.0, name="b")]
    )
    exps = (
        Expectation("extended_probability", -0.125, "DERIVED", 1e-12, {"index": (0, 0)}),
        Expectation("ep_in_range", 0.0, "DERIVED"),
        Expectation("medium_decoherent", 0.0, "DERIVED"),
        Expectation("extended_probability_sum", 1.0, "TRIVIAL"),
    )
    return ModelBundle("qubit-trine", make_state([1, 0]), hset, None, exps, {})


# -- spin environment ---------------------------------------------------------

_SIGMA_Y = np.array([[0, -1j], [1j, 0]])
_PLUS = np.array([1, 1]) / math.sqrt(2)
_MINUS = np.array([1, -1]) / math.sqrt(2)


def spin_environment_overlap(n_env: int, coupling: float) -> float:
    """Largest off-diagonal |D| in closed form: a quarter of the pointer overlap."""
    return 0.25 * abs(math.cos(coupling / 2)) ** n_env


def _helstrom(e0: np.ndarray, e1: np.ndarray) -> np.ndarray:
    """Projector onto the positive part of |e0><e0| - |e1><e1|."""
    basis, r = np.linalg.qr(np.stack([e0, e1], axis=1))
    small = basis.conj().T @ (np.outer(e0, e0.conj()) - np.outer(e1, e1.conj())) @ basis
    w, v = np.linalg.eigh(0.5 * (small + small.conj().T))
    pos = v[:, w > 1e-14]
    full = basis @ pos
    return full @ full.conj().T


def spin_environment(n_env: int = 4, coupling: float = math.pi / 2) -> ModelBundle:
    """System qubit in ``|+>`` imprinting its z value on ``n_env`` qubits.

    Over ``[t1, t2] = [0, 1]`` the Hamiltonian ``|1><1| (x) (coupling/2) sum_k Y_k``
    rotates every environment qubit by ``coupling`` about y when the
    system is 1. Histories: system z at t1, system x at t2. Records (given
    directly as Heisenberg operators at t_r = 2) read the system x value
    and the minimum-error discrimination of the two environment pointer
    states. Off-diagonal |D| is ``cos^N(coupling/2) / 4``.
    """
    if n_env < 1:
        raise ParamOutOfRange("need at least one environment qubit")
    if n_env > 12:
        raise DimensionGuard(f"n_env = {n_env} exceeds the guard of 12 (dimension {2 ** (n_env + 1)})")
    de = 2**n_env
    # sum_k Y_k on the environment, built one factor at a time
    ysum = np.zeros((de, de), dtype=complex)
    for k in range(n_env):
        ysum += np.kron(np.kron(np.eye(2**k), _SIGMA_Y), np.eye(2 ** (n_env - k - 1)))
    one = np.diag([0.0, 1.0])
    H = validate_hermitian(np.kron(one, 0.5 * coupling * ysum))
    dim = 2 * de

    z = validate_family(
        [basis_projector(dim, range(de)), basis_projector(dim, range(de, dim))], labels=["z0", "z1"]
    )
    ie = np.eye(de)
    x = validate_family(
        [validate_projector(np.kron(np.outer(v, v.conj()), ie)) for v in (_PLUS, _MINUS)], labels=["x+", "x-"]
    )
    hset = build_history_set(H, [ScheduledFamily(z, 0.0, name="z"), ScheduledFamily(x, 1.0, reference_time=0.0, name="x")])

    e0 = np.zeros(de)
    e0[0] = 1.0
    rot = np.array([math.cos(coupling / 2), math.sin(coupling / 2)])
    e1 = rot
    for _ in range(n_env - 1):
        e1 = np.kron(e1, rot)
    pi0 = _helstrom(e0.astype(complex), e1.astype(complex))
    pis = (pi0, np.eye(de) - pi0)
    # the propagator is diag(I, ue) in the system z basis, so conjugate blockwise
    ue = unitary_of(H, 1.0)[de:, de:]
    members, labels, alignment = [], [], []
    for s in range(2):
        left = ue @ pis[s]
        corner = left @ ue.conj().T
        for xi, v in enumerate((_PLUS, _MINUS)):
            q = np.outer(v, v.conj())
            m = np.block([[q[0, 0] * pis[s], q[0, 1] * left.conj().T], [q[1, 0] * left, q[1, 1] * corner]])
            members.append(validate_projector(0.5 * (m + m.conj().T)))
            labels.append(f"E{s}&x{'+-'[xi]}")
            alignment.append((s, xi))
    records = make_records(validate_family(members, labels=labels), 2.0, alignment)

    state = make_state(np.kron(_PLUS, e0))
    exps = [Expectation("max_offdiag_decoherence", spin_environment_overlap(n_env, coupling), "DERIVED", 1e-10)]
    params = {"n_env": n_env, "coupling": coupling}
    return ModelBundle(f"spin-env-{n_env}", state, hset, records, tuple(exps), params)


# -- recorded but not decoherent ---------------------------------------------

_Y_PLUS = np.array([1, 1j]) / math.sqrt(2)
_Y_MINUS = np.array([1, -1j]) / math.sqrt(2)
IMAGINARY_OVERLAP_MAX = 0.25


def imaginary_overlap(c: float = 0.1) -> ModelBundle:
    """Histories whose branch overlaps are purely imaginary with magnitude ``c``.

    A system qubit in ``|+>`` and an ancilla qubit in ``|0>`` (dim 4). The
    ancilla is rotated by ``phi`` about y when the system is 1, with
    ``cos(phi/2) = 4c``, so the pointer overlap is ``4c``. Histories are
    system z at t1 = 0 and system y at t2 = 1: the two branches ending in
    the same y value overlap by ``+-i c``. Records read the system y value
    and the minimum-error ancilla discrimination; their off-diagonal
    correlations are ``(1 - sqrt(1 - 16 c^2)) / 8 ~ c^2``.

    The branch-overlap magnitude cannot exceed 1/4 here, and at 1/4 the
    pointer states coincide so nothing is recorded; hence ``0 < c < 0.25``.
    """
    if not 0 < c < IMAGINARY_OVERLAP_MAX:
        raise ParamOutOfRange(f"c must lie in (0, {IMAGINARY_OVERLAP_MAX}), got {c!r}")
    kappa = 4 * c
    phi = 2 * math.acos(kappa)
    H = validate_hermitian(np.kron(np.diag([0.0, 1.0]), 0.5 * phi * _SIGMA_Y))
    i2 = np.eye(2)
    z = validate_family([basis_projector(4, [0, 1]), basis_projector(4, [2, 3])], labels=["z0", "z1"])
    y = validate_family(
        [validate_projector(np.kron(np.outer(v, v.conj()), i2)) for v in (_Y_PLUS, _Y_MINUS)], labels=["y+", "y-"]
    )
    hset = build_history_set(H, [ScheduledFamily(z, 0.0, name="z"), ScheduledFamily(y, 1.0, reference_time=0.0, name="y")])

    e0 = np.array([1.0, 0.0], dtype=complex)
    e1 = np.array([math.cos(phi / 2), math.sin(phi / 2)], dtype=complex)
    pi0 = _helstrom(e0, e1)
    pis = (pi0, i2 - pi0)
    u = unitary_of(H, 1.0)
    members, labels, alignment = [], [], []
    for s in range(2):
        for yi, v in enumerate((_Y_PLUS, _Y_MINUS)):
            m = u @ np.kron(np.outer(v, v.conj()), pis[s]) @ u.conj().T
            members.append(validate_projector(0.5 * (m + m.conj().T)))
            labels.append(f"E{s}&y{'+-'[yi]}")
            alignment.append((s, yi))
    records = make_records(validate_family(members, labels=labels), 2.0, alignment)
    state = make_state(np.kron(_PLUS, e0))
    r_off = (1 - math.sqrt(max(0.0, 1 - kappa**2))) / 8
    exps = (
        Expectation("max_offdiag_decoherence", c, "DERIVED", 1e-10),
        Expectation("max_offdiag_correlation", r_off, "DERIVED", 1e-10),
        Expectation("recorded", 1.0, "DERIVED", params={"eps": 0.02}),
        Expectation("medium_decoherent", 0.0, "DERIVED", params={"eps": 0.02}),
    )
    return ModelBundle("imaginary-overlap", state, hset, records, exps, {"c": c})


BUILTINS = {
    "three-box": three_box,
    "two-slit": two_slit,
    "qubit-trine": qubit_trine,
    "spin-env": spin_environment,
    "imaginary-overlap": imaginary_overlap,
}
