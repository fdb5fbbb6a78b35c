import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtsc.errors import DomainError
from mtsc.instance import hamming_instance
from mtsc.lab import (
    DistributedCode,
    brute_force_achievable,
    cells_for_rate,
    constant_code,
    distributed_typical_witness,
    empirical_pi,
    identity_code,
    is_distributed_typical_set,
    lemma3_size_audit,
    operational_sweep,
    partition_count,
    prop2_check,
    random_markov_chain,
    relaxed_targets,
    restricted_growth_strings,
    reverse_markov_check,
    verify_distortion_constraint,
)
from mtsc.prob import JointPMF, dsbs, markov_projection, l1_distance
from mtsc.typicality import all_sequences, typical_set, TypicalSetSpec

DSBS = dsbs(0.25).mass


def identity_pi(p):
    nx, ny = p.shape
    m = np.zeros((nx, ny, nx, ny))
    for x in range(nx):
        for y in range(ny):
            m[x, y, x, y] = p[x, y]
    return JointPMF.from_array(m)


def typical_pairs(n, eps):
    return typical_set(TypicalSetSpec(n, eps, dsbs(0.25)))


class TestCodes:
    def test_identity_rates(self):
        c = identity_code(hamming_instance(DSBS, 0, 0), 2)
        assert c.sizes == (4, 4) and c.rates == (1.0, 1.0)

    def test_constant_rates(self):
        assert constant_code(hamming_instance(DSBS, 0, 0), 3).rates == (0.0, 0.0)

    def test_decoder_must_cover(self):
        with pytest.raises(DomainError):
            DistributedCode(1, [0, 1], [0, 0], np.zeros((1, 1, 1)), np.zeros((1, 1, 1)))

    def test_cells_for_rate(self):
        assert cells_for_rate(2, 0.5) == 2 and cells_for_rate(1, 0) == 1
        with pytest.raises(DomainError):
            cells_for_rate(1, -1)


class TestDistortion:
    def test_identity_zero(self):
        inst = hamming_instance(DSBS, 0, 0)
        rep = verify_distortion_constraint(identity_code(inst, 1), inst, 0.1)
        assert rep.probability == pytest.approx(1.0) and rep.passed

    def test_constant_at_max(self):
        inst = hamming_instance(DSBS, 1, 1)
        assert verify_distortion_constraint(constant_code(inst, 2), inst, 0.1).passed

    def test_constant_at_zero_fails(self):
        inst = hamming_instance(DSBS, 0, 0)
        rep = verify_distortion_constraint(constant_code(inst, 1), inst, 0.1)
        assert rep.probability == pytest.approx(0.375) and not rep.passed

    def test_table_mismatch(self):
        inst = hamming_instance(DSBS, 0, 0)
        with pytest.raises(DomainError):
            verify_distortion_constraint(identity_code(inst, 1), hamming_instance(np.full((3, 2), 1 / 6), 0, 0), 0.1)


class TestProp2:
    def test_partition_code(self):
        inst = hamming_instance(DSBS, 0, 0)
        code = DistributedCode(2, [0, 0, 1, 1], [0, 1, 0, 1], np.zeros((2, 2, 2)), np.zeros((2, 2, 2)))
        assert prop2_check(code, inst, 0.5) == (True, None)

    def test_singletons(self):
        inst = hamming_instance(DSBS, 0, 0)
        assert prop2_check(identity_code(inst, 2), inst, 0.5)[0]

    def test_edited_cover(self):
        inst = hamming_instance(DSBS, 0, 0)
        code = constant_code(inst, 2)
        T = typical_pairs(2, 0.9)
        from mtsc.typicality import sequence_index
        xn, yn = sorted(T)[0]
        full = {(x, y) for x in range(4) for y in range(4)}
        missing = (int(sequence_index(np.array(xn), 2)[0]), int(sequence_index(np.array(yn), 2)[0]))
        edited = DistributedCode(2, code.f1, code.f2, code.xhat, code.yhat, cover={(0, 0): full - {missing}})
        ok, w = prop2_check(edited, inst, 0.9)
        assert not ok and (w.xn, w.yn) == (xn, yn)


class TestDistributedTypical:
    def test_singleton(self):
        pair = sorted(typical_pairs(2, 0.9))[0]
        assert is_distributed_typical_set({pair}, dsbs(0.25), 2, 0.9)

    def test_not_typical_subset(self):
        T = typical_pairs(2, 0.9)
        pairs = [(x, y) for x in itertools.product(range(2), repeat=2) for y in itertools.product(range(2), repeat=2)]
        atyp = next(p for p in pairs if p not in T)
        with pytest.raises(DomainError):
            is_distributed_typical_set({atyp}, dsbs(0.25), 2, 0.9)

    def test_rectangles(self):
        r = np.random.default_rng(0)
        T = typical_pairs(2, 0.9)
        X = [tuple(s) for s in all_sequences(2, 2)]
        for _ in range(1000):
            S1 = [x for x in X if r.random() < 0.5]
            S2 = [y for y in X if r.random() < 0.5]
            S = {(x, y) for x in S1 for y in S2} & T
            assert is_distributed_typical_set(S, dsbs(0.25), 2, 0.9)

    def test_shared_row_not_closed(self):
        T = typical_pairs(4, 1.0)
        found = False
        for (xa, y1), (xb, y2) in itertools.product(sorted(T), repeat=2):
            if xa != xb and y1 != y2 and (xa, y2) in T and (xb, y1) in T and (xb, y2) in T:
                S = {(xa, y1), (xa, y2), (xb, y1)}
                assert not is_distributed_typical_set(S, dsbs(0.25), 4, 1.0)
                assert distributed_typical_witness(S, dsbs(0.25), 4, 1.0) == (xb, y2)
                found = True
                break
        assert found


class TestReverseMarkov:
    def test_exact_chain_copy(self):
        m = np.zeros((2, 2, 2))
        m[0, 0, 0] = 0.5
        m[1, 1, 1] = 0.5
        rep = reverse_markov_check(JointPMF.from_array(m), 4, 0.2)
        assert rep.witnessed and rep.l1 == 0.0 and rep.conclusion_holds

    def test_xor_structure_never_witnessed(self):
        m = np.zeros((2, 2, 2))
        for x in range(2):
            for y in range(2):
                m[x, x ^ y, y] = 0.25
        for n in range(1, 7):
            rep = reverse_markov_check(JointPMF.from_array(m), n, 0.1)
            assert not rep.witnessed and rep.l1 == pytest.approx(1.0)

    def test_perturbed_chain(self):
        r = np.random.default_rng(3)
        for _ in range(40):
            p = random_markov_chain(r, sparsity=0.7).mass.copy()
            i, j = r.choice(8, 2, replace=False)
            move = min(0.005, p.flat[i])
            p.flat[i] -= move
            p.flat[j] += move
            q = JointPMF.normalized(p)
            for n, eps in itertools.product((2, 4), (0.1, 0.2)):
                rep = reverse_markov_check(q, n, eps)
                assert rep.conclusion_holds

    def test_axes(self):
        with pytest.raises(DomainError):
            reverse_markov_check(dsbs(0.25), 2, 0.1)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.sampled_from([0.1, 0.2]))
    def test_random_chains(self, seed, n, eps):
        p = random_markov_chain(np.random.default_rng(seed), sparsity=0.5)
        assert l1_distance(p, markov_projection(p, 0, 1, 2)) <= 1e-12
        assert reverse_markov_check(p, n, eps).conclusion_holds


class TestLemma3:
    def test_singletons_pass(self):
        inst = hamming_instance(DSBS, 0, 0)
        rep = lemma3_size_audit(identity_code(inst, 2), inst, identity_pi(DSBS), 0.5, 0.0)
        assert rep.passed

    def test_full_cell_fails(self):
        inst = hamming_instance(DSBS, 0, 0)
        rep = lemma3_size_audit(constant_code(inst, 4), inst, identity_pi(DSBS), 1.0, 0.01)
        assert not rep.passed
        assert rep.worst_joint_margin < 0

    def test_empirical_pi_identity(self):
        inst = hamming_instance(DSBS, 0, 0)
        pi = empirical_pi(identity_code(inst, 2), inst)
        assert l1_distance(pi, identity_pi(DSBS)) <= 1e-12

    def test_ball_code_margins(self):
        inst = hamming_instance(DSBS, 0.5, 0.5)
        X = all_sequences(2, 2)
        f = (X.sum(axis=1) >= 1).astype(int)
        recon = np.array([[0, 0], [1, 1]])
        xhat = np.stack([np.stack([recon[i]] * 2) for i in range(2)])
        yhat = np.stack([np.stack([recon[j] for j in range(2)])] * 2)
        code = DistributedCode(2, f, f, xhat, yhat)
        rep = lemma3_size_audit(code, inst, empirical_pi(code, inst), 0.5, 0.1)
        assert len(rep.rows) == 4
        assert all(np.isfinite(r.bound_bits) for r in rep.rows)

    def test_negative_slack(self):
        inst = hamming_instance(DSBS, 0, 0)
        with pytest.raises(DomainError):
            lemma3_size_audit(identity_code(inst), inst, identity_pi(DSBS), 0.5, -1)


class TestBruteForce:
    def test_partition_counts(self):
        assert partition_count(4, 4) == 15
        assert partition_count(4, 2) == 8
        assert sum(1 for _ in restricted_growth_strings(5, 3)) == partition_count(5, 3)

    def test_identity_found(self):
        inst = hamming_instance(np.full((2, 2), 0.25), 0, 0)
        res = brute_force_achievable(inst, 1, 1, 1, 0.01)
        assert res.achievable and res.mode == "exhaustive"
        assert verify_distortion_constraint(res.codes[0], inst, 0.01).passed

    def test_zero_rate_certified(self):
        res = brute_force_achievable(hamming_instance(DSBS, 0, 0), 1, 0, 0, 0.01)
        assert res.certified_not_achievable and res.verdict == "not achievable"

    def test_n2_best_distortions(self):
        res = brute_force_achievable(hamming_instance(DSBS, 0, 0), 2, 0.5, 0.5, 0.2)
        assert res.mode == "exhaustive"
        assert all(0 <= d <= 0.5 for d in res.best_distortions)

    def test_randomized_fallback(self):
        res = brute_force_achievable(hamming_instance(DSBS, 0.2, 0.2), 3, 2 / 3, 2 / 3, 0.2, budget=300)
        assert res.fell_back and res.mode == "randomized" and res.evaluated == 300
        assert res.verdict in ("achievable", "unknown")

    @settings(max_examples=10)
    @given(st.integers(0, 10**6), st.sampled_from([0.0, 0.5, 1.0]), st.sampled_from([0.0, 0.5, 1.0]))
    def test_returned_codes_verify(self, seed, R1, R2):
        r = np.random.default_rng(seed)
        inst = hamming_instance(r.dirichlet(np.ones(4)).reshape(2, 2), *r.random(2) * 0.5)
        res = brute_force_achievable(inst, 2, R1, R2, 0.2)
        for code in res.codes:
            rep = verify_distortion_constraint(code, inst, 0.2)
            assert rep.passed
        if res.best_code is not None:
            assert verify_distortion_constraint(res.best_code, inst, 0.2).probability == pytest.approx(res.best_probability)

    def test_sweep_shape(self):
        pts = operational_sweep(hamming_instance(DSBS, 0, 0), [1], [0, 1], [(0.0, 0.0)], 0.2)
        assert len(pts) == 4
        assert {p.verdict for p in pts} <= {"achievable", "not achievable"}

    def test_relaxed_targets(self):
        assert relaxed_targets(hamming_instance(DSBS, 0.1, 0.0), 0.2) == pytest.approx((0.5, 0.4))
