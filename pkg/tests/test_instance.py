import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtsc.errors import DomainError, ParseError, ValidationError
from mtsc.instance import (
    DistortionMeasure,
    SolverOptions,
    distortion_floor,
    hamming_instance,
    instance_to_dict,
    load_instance,
    make_instance,
    rate_zero_ceiling,
    serialize,
)
from mtsc.prob import entropy


def dsbs_doc(D=0.0, **extra):
    doc = {
        "x_labels": ["0", "1"],
        "y_labels": ["0", "1"],
        "p_xy": [[0.375, 0.125], [0.125, 0.375]],
        "d1": [[0, 1], [1, 0]],
        "d2": [[0, 1], [1, 0]],
        "D1": D,
        "D2": D,
    }
    doc.update(extra)
    return doc


class TestLoad:
    def test_dsbs_joint_entropy(self):
        inst = load_instance(json.dumps(dsbs_doc()))
        assert entropy(inst.source) == pytest.approx(1.811278, abs=1e-6)

    def test_not_normalized(self):
        doc = dsbs_doc(p_xy=[[0.375, 0.125], [0.125, 0.374]])
        with pytest.raises(ValidationError, match="source not normalized"):
            load_instance(doc)

    def test_bsc_from_uniform(self):
        pc = 0.1
        doc = dsbs_doc(p_xy=[[0.5 * (1 - pc), 0.5 * pc], [0.5 * pc, 0.5 * (1 - pc)]])
        inst = load_instance(doc)
        assert np.allclose(inst.source.mass.sum(axis=1), 0.5)

    def test_malformed_json_reports_position(self):
        with pytest.raises(ParseError, match="line 1"):
            load_instance('{"x_labels": [')

    def test_missing_field(self):
        doc = dsbs_doc()
        del doc["d2"]
        with pytest.raises(ValidationError, match="d2"):
            load_instance(doc)

    def test_collects_all_violations(self):
        doc = dsbs_doc(D1=-1, d1=[[0, 1]])
        with pytest.raises(ValidationError) as info:
            load_instance(doc)
        text = " ".join(info.value.violations)
        assert "D1" in text and "d1" in text

    def test_bool_target_rejected(self):
        with pytest.raises(ValidationError, match="D1"):
            load_instance(dsbs_doc(D1=True))

    def test_unknown_solver_option(self):
        with pytest.raises(ValidationError, match="solver"):
            load_instance(dsbs_doc(solver={"bogus": 1}))

    def test_roundtrip(self):
        inst = load_instance(dsbs_doc(D=0.123456789, solver={"starts": 3}))
        back = load_instance(serialize(inst))
        assert instance_to_dict(back) == instance_to_dict(inst)
        assert back.solver.starts == 3

    def test_recon_labels_default_to_source(self):
        inst = load_instance(dsbs_doc())
        assert inst.xhat_alphabet == inst.x_alphabet


class TestFloorCeiling:
    def test_hamming_floor_zero(self, rng):
        inst = hamming_instance(rng.dirichlet(np.ones(6)).reshape(2, 3), 0, 0)
        assert distortion_floor(inst) == (0.0, 0.0)

    def test_constant_matrix(self):
        inst = make_instance(np.full((2, 2), 0.25), np.full((2, 2), 0.7), np.full((2, 3), 0.2), 1, 1)
        assert distortion_floor(inst) == pytest.approx((0.7, 0.2))

    def test_row_minima(self):
        inst = make_instance(np.full((2, 2), 0.25), [[0, 3], [1, 0]], 1 - np.eye(2), 0, 0)
        assert distortion_floor(inst)[0] == 0.0

    def test_ceiling_uniform(self):
        assert rate_zero_ceiling(hamming_instance(np.full((2, 2), 0.25), 0, 0)) == pytest.approx((0.5, 0.5))

    def test_ceiling_point_mass(self):
        assert rate_zero_ceiling(hamming_instance([[1.0, 0.0], [0.0, 0.0]], 0, 0)) == (0.0, 0.0)

    def test_ceiling_skewed(self):
        p = np.outer([0.25, 0.75], [0.5, 0.5])
        assert rate_zero_ceiling(hamming_instance(p, 0, 0))[0] == pytest.approx(0.25)

    @given(st.integers(0, 10**6))
    def test_floor_below_ceiling(self, seed):
        r = np.random.default_rng(seed)
        inst = make_instance(r.dirichlet(np.ones(6)).reshape(3, 2), r.random((3, 3)), r.random((2, 4)), 0, 0)
        f, c = distortion_floor(inst), rate_zero_ceiling(inst)
        assert f[0] <= c[0] + 1e-15 and f[1] <= c[1] + 1e-15


class TestTypes:
    def test_distortion_shape(self):
        from mtsc.prob import Alphabet
        with pytest.raises(DomainError):
            DistortionMeasure(Alphabet.of_size(2), Alphabet.of_size(2), np.zeros((2, 3)))

    def test_negative_distortion(self):
        with pytest.raises(DomainError):
            DistortionMeasure.hamming(2).__class__(
                DistortionMeasure.hamming(2).source_alphabet, DistortionMeasure.hamming(2).recon_alphabet, -np.eye(2)
            )

    def test_hamming_dmax(self):
        assert DistortionMeasure.hamming(3).d_max == 1.0

    def test_solver_options(self):
        with pytest.raises(DomainError):
            SolverOptions(starts=0)
        with pytest.raises(DomainError):
            SolverOptions(beta_schedule=())
        assert SolverOptions.from_dict({"starts": 4}).starts == 4

    def test_negative_target(self):
        with pytest.raises(ValidationError):
            hamming_instance(np.full((2, 2), 0.25), -0.1, 0)

    def test_with_targets(self):
        inst = hamming_instance(np.full((2, 2), 0.25), 0, 0).with_targets(0.1, 0.2)
        assert inst.targets == (0.1, 0.2)
