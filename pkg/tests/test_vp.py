import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_loop, random_su_loop
from loopforge.errors import AliasingError
from loopforge.loops import (
    GridLoop,
    TrigMatrixLoop,
    classify,
    matrix_exp_skew,
    sup_distance,
    synthesize,
)
from loopforge.vp import SmoothnessSpec, partial_sum, synth_lip_su_loop, vp_mean, vp_weights


def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


class TestPartialSum:
    def test_bandlimited_reproduced(self, rng):
        loop = random_loop(rng, 2, 3)
        out = partial_sum(synthesize(loop, 16), 3)
        assert np.abs(out.coeffs - loop.coeffs).max() < 1e-13

    def test_zero_is_mean(self, rng):
        loop = random_loop(rng, 2, 3)
        out = partial_sum(synthesize(loop, 16), 0)
        assert out.degree == 0
        assert np.abs(out.coeffs[0] - loop.coeff(0)).max() < 1e-13

    def test_drops_high_blocks(self, rng):
        loop = random_loop(rng, 2, 5)
        out = partial_sum(synthesize(loop, 16), 3)
        assert out.degree == 3
        for k in range(-3, 4):
            assert np.abs(out.coeff(k) - loop.coeff(k)).max() < 1e-13

    def test_aliasing(self, rng):
        with pytest.raises(AliasingError):
            partial_sum(synthesize(random_loop(rng, 2, 1), 4), 3)


class TestVPMean:
    def test_weights_by_hand(self):
        # m = 4, h = 2: weights 1 for |k| <= 2, then 2/3, 1/3
        w = vp_weights(4)
        assert np.allclose(w, [1 / 3, 2 / 3, 1, 1, 1, 1, 1, 2 / 3, 1 / 3])

    def test_weights_match_mean_of_partial_sums(self, rng):
        loop = random_loop(rng, 2, 9)
        g = synthesize(loop, 32)
        for m in (1, 2, 5, 9):
            h = -(-m // 2)
            direct = sum(partial_sum(g, j).padded(m) for j in range(h, m + 1)) / (m - h + 1)
            assert np.abs(vp_mean(g, m).coeffs - direct).max() < 1e-13

    def test_low_degree_reproduced(self, rng):
        for m in (2, 3, 8, 9):
            h = -(-m // 2)
            loop = random_loop(rng, 2, h)
            out = vp_mean(synthesize(loop, 32), m)
            assert out.degree <= m
            assert np.abs(out.coeffs[m - h : m + h + 1] - loop.coeffs).max() < 1e-13

    def test_constant(self):
        A = np.array([[1j, 2], [-2, -1j]])
        for m in (0, 1, 7):
            out = vp_mean(GridLoop(np.broadcast_to(A, (16, 2, 2))), m)
            assert np.abs(out.coeff(0) - A).max() < 1e-14
            assert np.abs(out.coeffs).sum() == pytest.approx(np.abs(A).sum())

    def test_class_preservation(self, rng):
        A = random_su_loop(rng, 3, 20)
        rep = classify(vp_mean(A, 12), "algebra")
        assert rep.skewness_defect <= 1e-13 and rep.trace_defect <= 1e-13

    def test_linearity(self, rng):
        a, b = random_loop(rng, 2, 10), random_loop(rng, 2, 10)
        lhs = vp_mean(a + b, 6).coeffs
        rhs = (vp_mean(a, 6) + vp_mean(b, 6)).coeffs
        assert np.abs(lhs - rhs).max() < 1e-13

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 40), alpha=st.sampled_from([0.5, 1.5, 2.0]))
    def test_norm_bound(self, seed, m, alpha):
        g = synth_lip_su_loop(SmoothnessSpec(alpha, seed=seed, max_degree=64), 2)
        G = 512
        assert sup_distance(vp_mean(g, m), np.zeros((2, 2)), G) <= 3 * sup_distance(g, np.zeros((2, 2)), G)

    def test_rate_alpha_2(self):
        A = synth_lip_su_loop(SmoothnessSpec(2.0, seed=3, max_degree=1024), 2)
        ms = [8, 16, 32, 64, 128, 256]
        errs = [sup_distance(A, vp_mean(A, m), 4096) for m in ms]
        assert loglog_slope(ms, errs) <= -1.8


class TestSynth:
    def test_amplitude_zero(self):
        loop = synth_lip_su_loop(SmoothnessSpec(2.0, amplitude=0.0, max_degree=8), 3)
        assert not np.any(loop.coeffs)

    def test_deterministic(self):
        spec = SmoothnessSpec(1.5, seed=7, max_degree=32)
        assert np.array_equal(synth_lip_su_loop(spec, 3).coeffs, synth_lip_su_loop(spec, 3).coeffs)

    def test_seed_changes_loop(self):
        a = synth_lip_su_loop(SmoothnessSpec(1.5, seed=1, max_degree=8), 2)
        b = synth_lip_su_loop(SmoothnessSpec(1.5, seed=2, max_degree=8), 2)
        assert not np.array_equal(a.coeffs, b.coeffs)

    def test_coefficient_norms(self):
        spec = SmoothnessSpec(2.5, amplitude=0.7, seed=4, max_degree=16)
        loop = synth_lip_su_loop(spec, 3)
        for k in range(-16, 17):
            assert np.linalg.norm(loop.coeff(k), 2) == pytest.approx(0.7 * (1 + abs(k)) ** -3.5)

    def test_algebra_valued_and_exp_unitary(self):
        loop = synth_lip_su_loop(SmoothnessSpec(2.0, seed=0, max_degree=64), 3)
        assert classify(loop, "algebra").max_defect() < 1e-13
        U = GridLoop(matrix_exp_skew(synthesize(loop, 512).samples))
        assert classify(U).max_defect() <= 1e-12

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SmoothnessSpec(0.0)
        with pytest.raises(ValueError):
            SmoothnessSpec(1.0, max_degree=0)

    def test_spec_dict_round_trip(self):
        spec = SmoothnessSpec(1.5, amplitude=0.3, seed=11, max_degree=40)
        assert SmoothnessSpec.from_dict(spec.to_dict()) == spec
        assert SmoothnessSpec.from_dict({"alpha": 2}).max_degree == 512
