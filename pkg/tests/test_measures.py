import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from histlab import (
    AlignmentIncomplete,
    AllBranchesNull,
    HermitianOperator,
    NotDecoherent,
    NotRecorded,
    Partition,
    RecordTimeNotAfterHistories,
    ScheduledFamily,
    ScheduleMismatch,
    ToleranceConfig,
    WrongKind,
    ZeroEvidence,
    basis_projector,
    build_history_set,
    canonical_records,
    classify,
    coarse_grain,
    coarse_grain_records,
    correlation_matrix,
    decoherence_matrix,
    extended_probabilities,
    history_probabilities,
    incompatible,
    is_medium_decoherent,
    is_recorded,
    make_records,
    make_state,
    product_fine_graining,
    projector_onto,
    record_probabilities,
    retrodict,
    strong_record_check,
    tensor_compose,
    tensor_compose_records,
    three_box,
    validate_family,
)
from histlab.histories import split_composite_index

from _builders import (
    decoherent_history_set,
    random_history_set,
    random_records,
    random_state,
    strongly_recorded,
)


def _z_set(times=(0.0, 1.0)):
    z = validate_family([basis_projector(2, [0]), basis_projector(2, [1])], labels=["0", "1"])
    return build_history_set(HermitianOperator.zero(2), [ScheduledFamily(z, t) for t in times])


def test_decoherence_matrix_of_three_box():
    b = three_box("A_set")
    dm = decoherence_matrix(b.state, b.set)
    assert np.allclose(dm.entries, np.diag([1, 2, 0, 6]) / 9, atol=1e-15)
    assert dm.kind == "decoherence"
    assert is_medium_decoherent(dm)
    with pytest.raises(WrongKind):
        is_recorded(dm)


def test_correlation_requires_later_records_and_alignment():
    hset = _z_set()
    psi = make_state([1, 0])
    fam = validate_family([basis_projector(2, [0]), basis_projector(2, [1])])
    with pytest.raises(RecordTimeNotAfterHistories):
        correlation_matrix(psi, hset, make_records(fam, 1.0, [(0, 0), (1, 1)]))
    with pytest.raises(AlignmentIncomplete):
        correlation_matrix(psi, hset, make_records(fam, 2.0, [(0, 0), (1, 1)]))
    with pytest.raises(AlignmentIncomplete):
        make_records(fam, 2.0, [(0, 0)])


def test_residual_records_get_their_own_rows():
    hset = _z_set((0.0,))
    psi = make_state([1, 0])
    fam = validate_family(
        [basis_projector(2, [0]), basis_projector(2, []), basis_projector(2, [1])]
    )
    rec = make_records(fam, 1.0, [(0,), (1,), None])
    m = correlation_matrix(psi, hset, rec)
    assert m.row_keys[-1] == ("residual", 0)
    assert m.entries.shape == (3, 2)
    assert abs(m.normalization - 1) < 1e-15
    with pytest.raises(WrongKind):
        is_medium_decoherent(m)


def test_history_probabilities_refuse_unrecorded_sets():
    b = three_box("fine_AB")
    with pytest.raises(NotRecorded):
        history_probabilities(b.state, b.set)


def test_canonical_records_are_strong_and_handle_null_branches():
    b = three_box("A_set")
    rec = canonical_records(b.state, b.set)
    assert [p.rank for p in rec.family.members] == [1, 1, 0, 1]
    assert rec.record_time == b.set.final_time + 1
    assert strong_record_check(b.state, b.set, rec)
    corr = correlation_matrix(b.state, b.set, rec)
    assert np.allclose(corr.entries, np.diag([1, 2, 0, 6]) / 9, atol=1e-15)
    with pytest.raises(NotDecoherent):
        canonical_records(three_box("fine_AB").state, three_box("fine_AB").set)


def test_all_null_branches_refused():
    hset = _z_set((0.0,))
    psi = make_state([1, 0])
    tol = ToleranceConfig(eps_rec=2.0, eps_dec=2.0)
    with pytest.raises(AllBranchesNull):
        canonical_records(psi, hset, tol)


def test_retrodict_and_zero_evidence():
    b = three_box("A_set")
    table = retrodict(b.state, b.set, 0)
    assert table[(0,)] == pytest.approx(1, abs=1e-12)
    assert table[(1,)] == pytest.approx(0, abs=1e-12)
    hset = _z_set()
    with pytest.raises(ZeroEvidence):
        retrodict(make_state([1, 0]), hset, 1)
    with pytest.raises(ScheduleMismatch):
        retrodict(b.state, b.set, 5)


def test_classification_of_three_box_sets():
    c = classify(three_box("A_set").state, three_box("A_set").set)
    assert c.flags == {"strongly_recorded": True, "recorded": True, "medium_decoherent": True, "ep_in_range": True}
    assert c.records_source == "canonical"
    fine = three_box("fine_AB")
    c = classify(fine.state, fine.set)
    assert c.medium_decoherent is False and c.recorded is None
    assert c.witnesses["medium_decoherent"].magnitude == pytest.approx(1 / 9, abs=1e-12)


def test_three_box_sets_are_incompatible():
    a, b = three_box("A_set"), three_box("B_set")
    assert incompatible(a.set, b.set, a.state)
    assert not incompatible(a.set, a.set, a.state)
    with pytest.raises(NotRecorded):
        incompatible(three_box("fine_AB").set, a.set, a.state)


def test_product_fine_graining_needs_commuting_slots():
    hset = _z_set((0.0,))
    x = validate_family([projector_onto([1, 1]), projector_onto([1, -1])])
    other = build_history_set(HermitianOperator.zero(2), [ScheduledFamily(x, 0.0)])
    with pytest.raises(ScheduleMismatch):
        product_fine_graining(hset, other)


# -- properties over random models ----------------------------------------------


@settings(max_examples=120, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_random_models_normalize(seed):
    rng = np.random.default_rng(seed)
    hset = random_history_set(rng)
    psi = random_state(rng, hset.dim)
    rec = random_records(rng, hset)
    dm = decoherence_matrix(psi, hset)
    # D is a Gram matrix: Hermitian, positive, unit trace, entries summing to 1
    assert np.max(np.abs(dm.entries - dm.entries.conj().T)) < 1e-14
    assert np.min(np.linalg.eigvalsh(dm.entries)) > -1e-12
    assert abs(np.trace(dm.entries).real - 1) < 1e-10
    assert abs(dm.entries.sum() - 1) < 1e-10
    corr = correlation_matrix(psi, hset, rec)
    assert abs(corr.normalization - 1) < 1e-10
    assert abs(extended_probabilities(psi, hset).total - 1) < 1e-10
    assert abs(record_probabilities(psi, rec).total - 1) < 1e-10
    # the extended probability is the column sum of the correlation matrix
    ep = extended_probabilities(psi, hset)
    cols = corr.entries.sum(axis=0)
    for k, a in enumerate(hset.indices):
        assert abs(cols[k] - ep[a]) < 1e-12


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_coarse_graining_is_additive(seed):
    rng = np.random.default_rng(seed)
    hset = random_history_set(rng)
    psi = random_state(rng, hset.dim)
    labels = rng.integers(0, max(1, len(hset) // 2) + 1, size=len(hset))
    part = Partition.by(hset.indices, key=lambda a: int(labels[hset.position(a)]))
    cset = coarse_grain(hset, part)
    ep, cep = extended_probabilities(psi, hset), extended_probabilities(psi, cset)
    dm, cdm = decoherence_matrix(psi, hset), decoherence_matrix(psi, cset)
    for i, block in enumerate(part.blocks):
        assert abs(cep[(i,)] - sum(ep[a] for a in block)) < 1e-12
        for j, other in enumerate(part.blocks):
            s = sum(dm[a, b] for a in block for b in other)
            assert abs(cdm[(i,), (j,)] - s) < 1e-12


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_exactly_decoherent_sets_have_strong_canonical_records(seed):
    rng = np.random.default_rng(seed)
    hset = decoherent_history_set(rng)
    psi = random_state(rng, hset.dim)
    assert is_medium_decoherent(decoherence_matrix(psi, hset), ToleranceConfig().with_epsilon(1e-12))
    rec = canonical_records(psi, hset)
    assert strong_record_check(psi, hset, rec, ToleranceConfig().with_epsilon(1e-10))
    c = classify(psi, hset, rec)
    assert c.strongly_recorded and c.recorded and c.medium_decoherent


def test_coarse_records_of_a_recorded_set_record_the_coarse_set():
    rng = np.random.default_rng(21)
    for _ in range(30):
        psi, hset, rec = strongly_recorded(rng)
        part = Partition.by(hset.indices, key=lambda a: a[0])
        cset = coarse_grain(hset, part)
        crec = coarse_grain_records(rec, cset)
        assert is_recorded(correlation_matrix(psi, cset, crec))
        assert strong_record_check(psi, cset, crec)


def test_tensor_composed_records():
    rng = np.random.default_rng(22)
    for _ in range(20):
        pa, ha, ra = strongly_recorded(rng, d=int(rng.integers(2, 5)), slots=2)
        pb, hb0, rb0 = strongly_recorded(rng, d=int(rng.integers(2, 5)), slots=2)
        # put b on a's clock
        hb = build_history_set(
            hb0.hamiltonian, [ScheduledFamily(s.family, t) for s, t in zip(hb0.schedule, ha.times)]
        )
        rb = make_records(rb0.family, ra.record_time, rb0.alignment)
        comp, psi = tensor_compose(ha, pa, hb, pb)
        rec = tensor_compose_records(ra, ha, rb, hb)
        corr = correlation_matrix(psi, comp, rec)
        assert is_recorded(corr, ToleranceConfig().with_epsilon(1e-10))
        ca = correlation_matrix(pa, ha, ra)
        summed = {}
        for r in comp.indices:
            for c in comp.indices:
                ar, _ = split_composite_index(r, hb.shape)
                ac, _ = split_composite_index(c, hb.shape)
                summed[ar, ac] = summed.get((ar, ac), 0.0) + corr[r, c]
        for (ar, ac), v in summed.items():
            assert abs(v - ca[ar, ac]) < 1e-10
