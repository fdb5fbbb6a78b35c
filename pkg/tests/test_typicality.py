import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtsc.errors import DomainError, ResourceCapError
from mtsc.instance import DistortionMeasure
from mtsc.prob import JointPMF, dsbs, product_pmf
from mtsc.typicality import (
    TypicalSetSpec,
    all_sequences,
    conditional_typical_set,
    distortion_ball,
    extended_support,
    is_typical,
    sequence_index,
    type_counts,
    typical_probability,
    typical_set,
    typical_with_set,
    weak_inclusion,
)

UNIFORM = JointPMF.from_array([0.5, 0.5])
COPY = JointPMF.from_array(np.diag([0.5, 0.5]))


def brute_typical(p, n, eps):
    """Direct enumeration oracle for a single-axis pmf."""
    k = len(p)
    out = set()
    for s in itertools.product(range(k), repeat=n):
        if all(abs(s.count(a) / n - p[a]) < eps / k and (p[a] > 0 or a not in s) for a in range(k)):
            out.add(s)
    return out


class TestTypeCounts:
    def test_examples(self):
        assert type_counts([0, 0, 1], 2).tolist() == [2, 1]
        assert type_counts([0, 1, 0, 1], 2).tolist() == [2, 2]

    def test_empty(self):
        with pytest.raises(DomainError):
            type_counts([], 2)

    def test_foreign(self):
        with pytest.raises(DomainError):
            type_counts([0, 2], 2)


class TestTypicalSet:
    def test_uniform_n2_eps06(self):
        # only the balanced sequences satisfy |k/2 - 1/2| < 0.3
        assert typical_set(TypicalSetSpec(2, 0.6, UNIFORM)) == {(0, 1), (1, 0)}

    def test_point_mass(self):
        p = JointPMF.from_array([0.0, 1.0, 0.0])
        assert typical_set(TypicalSetSpec(4, 0.9, p)) == {(1, 1, 1, 1)}

    def test_small_eps_odd_n_empty(self):
        assert typical_set(TypicalSetSpec(3, 1e-9, UNIFORM)) == frozenset()

    def test_cap(self):
        with pytest.raises(ResourceCapError):
            TypicalSetSpec(30, 0.1, UNIFORM)

    def test_bad_eps(self):
        with pytest.raises(DomainError):
            TypicalSetSpec(2, 0.0, UNIFORM)

    def test_joint_elements_are_pairs(self):
        T = typical_set(TypicalSetSpec(2, 0.9, dsbs(0.25)))
        assert all(len(e) == 2 and len(e[0]) == 2 for e in T)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.floats(0.05, 1.0))
    def test_matches_oracle(self, seed, n, eps):
        p = np.random.default_rng(seed).dirichlet(np.ones(3))
        assert typical_set(TypicalSetSpec(n, eps, JointPMF.from_array(p))) == brute_typical(list(p), n, eps)

    def test_probability_grows(self):
        p = JointPMF.from_array([0.3, 0.7])
        probs = [typical_probability(TypicalSetSpec(n, 0.5, p)) for n in (4, 8, 16)]
        assert probs[0] <= probs[1] <= probs[2]
        assert probs[-1] >= 1 - 0.5


class TestConditional:
    def test_independent_ignores_condition(self):
        joint = product_pmf([0.5, 0.5], [0.5, 0.5])
        a = conditional_typical_set(joint, (0, 1), 2, 0.9)
        b = conditional_typical_set(joint, (1, 0), 2, 0.9)
        assert {tuple(sorted(x)) for x in a} == {tuple(sorted(x)) for x in b}

    def test_copy_only_equal(self):
        assert conditional_typical_set(COPY, (0, 1), 2, 0.5) == {(0, 1)}

    def test_copy_atypical_empty(self):
        assert conditional_typical_set(COPY, (0, 0), 2, 0.5) == frozenset()

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            conditional_typical_set(COPY, (0, 1, 0), 2, 0.5)

    def test_with_set_singleton_and_empty(self):
        assert typical_with_set(COPY, [(0, 1)], 2, 0.5) == conditional_typical_set(COPY, (0, 1), 2, 0.5)
        assert typical_with_set(COPY, [], 2, 0.5) == frozenset()

    @given(st.integers(0, 2**32 - 1))
    def test_with_set_monotone(self, seed):
        r = np.random.default_rng(seed)
        joint = JointPMF.from_array(r.dirichlet(np.ones(4)).reshape(2, 2))
        Y = [tuple(s) for s in all_sequences(2, 3)]
        S = [y for y in Y if r.random() < 0.5]
        S2 = S + [y for y in Y if y not in S and r.random() < 0.5]
        assert typical_with_set(joint, S, 3, 0.8) <= typical_with_set(joint, S2, 3, 0.8)

    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 1.0))
    def test_extended_support_subset(self, seed, eps):
        r = np.random.default_rng(seed)
        joint = JointPMF.from_array(r.dirichlet(np.ones(4)).reshape(2, 2))
        ext = extended_support(joint, 3, eps)
        T = typical_set(TypicalSetSpec(3, eps, JointPMF.from_array(joint.mass.sum(1))))
        assert ext <= T

    def test_extended_support_copy(self):
        T = typical_set(TypicalSetSpec(4, 0.5, UNIFORM))
        assert extended_support(COPY, 4, 0.5) == T

    def test_extended_support_independent_large_eps(self):
        joint = product_pmf([0.5, 0.5], [0.5, 0.5])
        assert extended_support(joint, 4, 4.0) == typical_set(TypicalSetSpec(4, 4.0, UNIFORM))


class TestWeakInclusion:
    def test_subset(self):
        A = {(0, 1), (1, 0)}
        assert weak_inclusion(A, A | {(0, 0)}, UNIFORM, 1e-9)

    def test_disjoint(self):
        assert not weak_inclusion({(0, 1)}, {(1, 0)}, UNIFORM, 0.99)

    def test_ninety_five_percent(self):
        p = JointPMF.from_array([0.95, 0.05])
        assert weak_inclusion({(0,), (1,)}, {(0,)}, p, 0.1)

    def test_zero_probability(self):
        with pytest.raises(DomainError):
            weak_inclusion({(1,)}, {(0,)}, JointPMF.from_array([1.0, 0.0]), 0.1)


class TestDistortionBall:
    ham = DistortionMeasure.hamming(2)

    def test_zero_radius_empty(self):
        assert distortion_ball((0, 1, 0), 0.0, self.ham) == frozenset()

    def test_full_space(self):
        assert len(distortion_ball((0, 1, 0), 1.01, self.ham)) == 8

    def test_one_flip(self):
        ball = distortion_ball((0, 0, 0), 0.34, self.ham, 3)
        assert ball == {(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)}

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            distortion_ball((0, 0), 0.5, self.ham, 3)


def test_sequence_index_roundtrip():
    S = all_sequences(3, 4)
    assert sequence_index(S, 3).tolist() == list(range(81))


def test_is_typical_strict():
    assert not is_typical([0, 1, 0], [0.5, 0.5], 1e-9)
    assert is_typical([0, 1], [0.5, 0.5, 0.0], 10.0)
    assert not is_typical([0, 2], [0.5, 0.5, 0.0], 10.0)
    assert is_typical([0, 1], [0.5, 0.5], 0.01)
