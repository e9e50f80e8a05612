from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from histlab import (
    CompletenessViolation,
    DimensionMismatch,
    HermitianOperator,
    IndexOutOfRange,
    InvalidPartition,
    Partition,
    ScheduledFamily,
    ScheduleMismatch,
    TimesNotIncreasing,
    basis_projector,
    branch_vector,
    build_history_set,
    chain_operator,
    coarse_grain,
    split_composite_index,
    tensor_compose,
    unitary_of,
    validate_family,
    validate_hermitian,
)
from histlab.hilbert import max_norm

from _builders import random_family, random_hermitian, random_history_set, random_state


def _qubit_z():
    return validate_family([basis_projector(2, [0]), basis_projector(2, [1])], labels=["0", "1"])


def test_schedule_validation():
    z = _qubit_z()
    H = HermitianOperator.zero(2)
    with pytest.raises(ScheduleMismatch):
        build_history_set(H, [])
    with pytest.raises(TimesNotIncreasing) as exc:
        build_history_set(H, [ScheduledFamily(z, 1.0), ScheduledFamily(z, 1.0)])
    assert exc.value.location == 1
    with pytest.raises(DimensionMismatch):
        build_history_set(HermitianOperator.zero(3), [ScheduledFamily(z, 1.0)])


def test_completeness_violation_detected():
    # bypass family validation to build an incomplete "family"
    from histlab import ProjectorFamily

    broken = ProjectorFamily((basis_projector(2, [0]),), ("0",))
    with pytest.raises(CompletenessViolation):
        build_history_set(HermitianOperator.zero(2), [ScheduledFamily(broken, 0.0)])


def test_chain_is_time_ordered_product():
    rng = np.random.default_rng(2)
    d = 4
    H = random_hermitian(rng, d)
    f1, f2 = random_family(rng, d, 2), random_family(rng, d, 3)
    hset = build_history_set(H, [ScheduledFamily(f1, 0.5), ScheduledFamily(f2, 1.7)])
    u1, u2 = unitary_of(H, 0.5), unitary_of(H, 1.7)
    for a in hset.indices:
        p1 = u1 @ f1.members[a[0]].matrix @ u1.conj().T
        p2 = u2 @ f2.members[a[1]].matrix @ u2.conj().T
        assert max_norm(chain_operator(hset, a) - p2 @ p1) < 1e-12
    assert hset.shape == (2, 3) and len(hset) == 6
    assert hset.indices[0] == (0, 0) and hset.indices[1] == (0, 1)
    with pytest.raises(IndexOutOfRange):
        hset.chain((2, 0))


def test_reference_time_evolves_from_reference():
    rng = np.random.default_rng(4)
    H = random_hermitian(rng, 3)
    f = random_family(rng, 3, 2)
    at_zero = build_history_set(H, [ScheduledFamily(f, 2.0, reference_time=0.0)])
    u = unitary_of(H, 2.0)
    expected = u @ f.members[0].matrix @ u.conj().T
    assert max_norm(at_zero.chain((0,)) - expected) < 1e-12
    own_time = build_history_set(H, [ScheduledFamily(f, 2.0)])
    assert max_norm(own_time.chain((0,)) - f.members[0].matrix) == 0


def test_branch_vectors_match_chains_loop():
    rng = np.random.default_rng(8)
    for _ in range(20):
        hset = random_history_set(rng)
        psi = random_state(rng, hset.dim)
        fast = hset.branch_vectors(psi)
        for k, a in enumerate(hset.indices):
            slow = branch_vector(hset, psi, a).vector
            assert np.max(np.abs(fast[k] - slow)) <= 1e-12
        assert max_norm(hset.chains.sum(axis=0) - np.eye(hset.dim)) < 1e-10


def test_parallel_evaluation_matches_serial():
    rng = np.random.default_rng(9)
    sets = [random_history_set(rng) for _ in range(12)]
    states = [random_state(rng, h.dim) for h in sets]
    serial = [h.branch_vectors(s) for h, s in zip(sets, states)]
    with ThreadPoolExecutor(max_workers=4) as pool:
        parallel = list(pool.map(lambda hs: hs[0].branch_vectors(hs[1]), zip(sets, states)))
    for a, b in zip(serial, parallel):
        assert np.max(np.abs(a - b)) <= 1e-12


def test_partition_validation_and_composition():
    idx = [(0,), (1,), (2,)]
    Partition.of([[(0,), (2,)], [(1,)]]).validate(idx)
    for bad in ([[(0,)], [(1,)]], [[(0,), (1,)], [(1,), (2,)]], [[(0,), (1,), (2,), (3,)]]):
        with pytest.raises(InvalidPartition):
            Partition.of(bad).validate(idx)
    with pytest.raises(InvalidPartition):
        Partition.of([[], [(0,), (1,), (2,)]]).validate(idx)
    inner = Partition.singletons(idx)
    outer = Partition.of([[(0,), (1,)], [(2,)]])
    composed = inner.then(outer)
    assert composed.blocks == (frozenset({(0,), (1,)}), frozenset({(2,)}))
    assert Partition.whole(idx).largest_block == 3


def test_coarse_graining_sums_chains():
    rng = np.random.default_rng(12)
    hset = random_history_set(rng, d=4, slots=2)
    part = Partition.by(hset.indices, key=lambda a: a[0])
    cset = coarse_grain(hset, part)
    psi = random_state(rng, 4)
    for i, block in enumerate(part.blocks):
        expected = sum(hset.chain(a) for a in block)
        assert max_norm(cset.chain((i,)) - expected) < 1e-12
    assert max_norm(cset.branch_vectors(psi).sum(axis=0) - psi.amplitudes) < 1e-12
    assert cset.completeness_residual() < 1e-10
    with pytest.raises(InvalidPartition):
        coarse_grain(hset, Partition.of([[hset.indices[0]]]))
    # coarse graining a coarse set
    ccset = coarse_grain(cset, Partition.whole(cset.indices))
    assert max_norm(ccset.chain((0,)) - np.eye(4)) < 1e-10


def test_tensor_compose_products_and_indices():
    rng = np.random.default_rng(13)
    ha = random_history_set(rng, d=2, slots=2, with_hamiltonian=True)
    sched_b = [ScheduledFamily(random_family(rng, 3, 2), t) for t in ha.times]
    hb = build_history_set(random_hermitian(rng, 3), sched_b)
    sa, sb = random_state(rng, 2), random_state(rng, 3)
    comp, s = tensor_compose(ha, sa, hb, sb)
    assert comp.dim == 6
    for c in comp.indices:
        a, b = split_composite_index(c, hb.shape)
        assert max_norm(comp.chain(c) - np.kron(ha.chain(a), hb.chain(b))) < 1e-10
    bad = build_history_set(hb.hamiltonian, [ScheduledFamily(sched_b[0].family, 99.0)])
    with pytest.raises(ScheduleMismatch):
        tensor_compose(ha, sa, bad, sb)


def test_labels():
    z = _qubit_z()
    hset = build_history_set(validate_hermitian(np.zeros((2, 2))), [ScheduledFamily(z, 0.0), ScheduledFamily(z, 1.0)])
    assert hset.label((0, 1)) == "0,1"
    cset = coarse_grain(hset, Partition.of([[(0, 0), (1, 1)], [(0, 1), (1, 0)]]))
    assert cset.label((0,)) == "0,0|1,1"
