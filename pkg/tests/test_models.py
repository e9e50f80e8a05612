import math

import numpy as np
import pytest

from histlab import (
    BUILTINS,
    DimensionGuard,
    PacketOverflow,
    ParamOutOfRange,
    ToleranceConfig,
    classify,
    correlation_matrix,
    decoherence_matrix,
    extended_probabilities,
    imaginary_overlap,
    qubit_trine,
    spin_environment,
    three_box,
    two_slit,
    verify,
)
from histlab.models import TWO_SLIT_DEFAULTS, scan_two_slit, screen_pattern, spin_environment_overlap


def _offdiag(m):
    w = m.worst_off_diagonal()
    return 0.0 if w is None else w.magnitude


BUNDLES = [
    ("three-box A", lambda: three_box("A_set")),
    ("three-box B", lambda: three_box("B_set")),
    ("three-box fine", lambda: three_box("fine_AB")),
    ("two-slit", lambda: two_slit()),
    ("two-slit recorded", lambda: two_slit(with_record=True)),
    ("qubit-trine", qubit_trine),
    ("spin-env", lambda: spin_environment()),
    ("imaginary-overlap", lambda: imaginary_overlap()),
]


@pytest.mark.parametrize("name,make", BUNDLES, ids=[n for n, _ in BUNDLES])
def test_shipped_expectations_hold(name, make):
    results = verify(make())
    assert results
    failed = [(r.expectation, r.value) for r in results if not r.passed]
    assert not failed


def test_builtin_registry():
    assert set(BUILTINS) == {"three-box", "two-slit", "qubit-trine", "spin-env", "imaginary-overlap"}


def test_three_box_variants():
    with pytest.raises(ParamOutOfRange):
        three_box("C_set")
    fine = three_box("fine_AB")
    assert _offdiag(decoherence_matrix(fine.state, fine.set)) == pytest.approx(1 / 9, abs=1e-12)
    assert fine.set.shape == (2, 2, 2)


def test_qubit_trine_value():
    b = qubit_trine()
    ep = extended_probabilities(b.state, b.set)
    assert ep[(0, 0)] == pytest.approx(-0.125, abs=1e-12)
    assert abs(ep.total - 1) < 1e-12
    assert classify(b.state, b.set).ep_in_range is False


def test_two_slit_defaults_and_guards():
    assert TWO_SLIT_DEFAULTS == {"bins": 64, "packet_width": 0.75, "propagation_time": 16.0}
    b = two_slit()
    pat = screen_pattern(b.state, b.set)
    assert abs(pat["intensity"].sum() - 1) < 1e-10
    assert min(pat["ep_upper"].min(), pat["ep_lower"].min()) < 0
    assert pat["fringe_ratio"] > 10
    with pytest.raises(PacketOverflow):
        two_slit(bins=16, slit_u=1)
    with pytest.raises(PacketOverflow):
        two_slit(bins=16, slit_u=7, slit_l=8)
    with pytest.raises(ParamOutOfRange):
        two_slit(bins=4)


def test_two_slit_with_record_kills_fringes():
    b = two_slit(with_record=True)
    assert b.set.dim == 2 * 64
    pat = screen_pattern(b.state, b.set)
    assert pat["visibility"] <= 1e-10
    tight = ToleranceConfig().with_epsilon(1e-10)
    c = classify(b.state, b.set, b.records, tight)
    assert c.medium_decoherent and c.recorded and c.strongly_recorded and c.ep_in_range


def test_scan_recovers_shipped_defaults():
    hits = scan_two_slit(bins_options=(64,), widths=(0.75,), times=(16.0,))
    assert any(h["slit_u"] == 24 and h["slit_l"] == 40 for h in hits)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("theta", [0.0, math.pi / 4, math.pi / 2, 2.0, math.pi])
def test_spin_environment_matches_closed_form(n, theta):
    b = spin_environment(n, theta)
    got = _offdiag(decoherence_matrix(b.state, b.set))
    assert got == pytest.approx(spin_environment_overlap(n, theta), abs=1e-10)


def test_spin_environment_edge_cases():
    exact = spin_environment(1, math.pi)
    c = classify(exact.state, exact.set, exact.records)
    assert c.medium_decoherent and c.recorded
    free = spin_environment(2, 0.0)
    assert _offdiag(decoherence_matrix(free.state, free.set)) == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(DimensionGuard):
        spin_environment(13)
    with pytest.raises(ParamOutOfRange):
        spin_environment(0)


def test_spin_environment_decoherence_and_records_improve_with_n():
    d, r = [], []
    for n in range(1, 7):
        b = spin_environment(n, math.pi / 4)
        d.append(_offdiag(decoherence_matrix(b.state, b.set)))
        r.append(_offdiag(correlation_matrix(b.state, b.set, b.records)))
    assert all(x > y for x, y in zip(d, d[1:]))
    assert all(x > y for x, y in zip(r, r[1:]))


@pytest.mark.parametrize("c", [0.01, 0.05, 0.1, 0.2, 0.24])
def test_imaginary_overlap_magnitudes(c):
    b = imaginary_overlap(c)
    dm = decoherence_matrix(b.state, b.set)
    off = dm.entries[dm.off_diagonal_mask()]
    big = off[np.abs(off) > 1e-12]
    assert np.allclose(np.abs(big), c, atol=1e-10)
    assert np.max(np.abs(big.real)) < 1e-12
    r = _offdiag(correlation_matrix(b.state, b.set, b.records))
    assert r == pytest.approx((1 - math.sqrt(1 - 16 * c * c)) / 8, abs=1e-10)
    # O(c^2): between c^2 and 2 c^2 on this range
    assert c * c <= r + 1e-15 <= 2 * c * c + 1e-12


def test_imaginary_overlap_range():
    for bad in (0.0, -0.1, 0.25, 0.3, 0.5):
        with pytest.raises(ParamOutOfRange):
            imaginary_overlap(bad)
    tiny = imaginary_overlap(1e-6)
    assert _offdiag(decoherence_matrix(tiny.state, tiny.set)) < 2e-6
