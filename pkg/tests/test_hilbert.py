import numpy as np
import pytest

from mzworkbench.errors import DimensionMismatchError, WorkbenchError
from mzworkbench.hilbert import (
    Generator,
    HilbertSpace,
    inner,
    make_skew_generator,
    norm,
    propagate,
    propagate_series,
    spectral_decompose,
)

from conftest import block_generator, rotation_matrix_2d, taylor_expm_oracle


class TestInnerProduct:
    def test_unit_basis_orthogonal(self):
        space = HilbertSpace(3)
        e1, e2 = np.eye(3)[0], np.eye(3)[1]
        assert inner(space, e1, e2) == 0.0
        assert norm(space, e1) == 1.0

    def test_symmetry_random(self):
        rng = np.random.default_rng(1)
        space = HilbertSpace(6)
        for _ in range(10):
            x, y = rng.standard_normal(6), rng.standard_normal(6)
            assert inner(space, x, y) == pytest.approx(inner(space, y, x), rel=1e-14)

    def test_weighted_inner(self):
        space = HilbertSpace(2, weights=np.array([2.0, 3.0]))
        assert inner(space, [1.0, 1.0], [1.0, 1.0]) == pytest.approx(5.0)
        assert norm(space, [1.0, 0.0]) == pytest.approx(np.sqrt(2.0))

    def test_dimension_mismatch(self):
        space = HilbertSpace(3)
        with pytest.raises(DimensionMismatchError):
            inner(space, np.ones(3), np.ones(4))

    def test_positive_definite(self):
        rng = np.random.default_rng(2)
        space = HilbertSpace(5, weights=rng.uniform(0.5, 2.0, 5))
        x = rng.standard_normal(5)
        assert inner(space, x, x) > 0
        assert norm(space, np.zeros(5)) == 0.0

    def test_rejects_bad_weights(self):
        with pytest.raises(WorkbenchError):
            HilbertSpace(2, weights=np.array([1.0, 0.0]))
        with pytest.raises(WorkbenchError):
            HilbertSpace(0)


class TestMakeSkewGenerator:
    def test_empty_spectrum_is_zero_matrix(self):
        gen = make_skew_generator(frequencies=[], dim=1)
        assert gen.matrix.shape == (1, 1)
        assert gen.matrix[0, 0] == 0.0

    def test_single_plane_forced_up_to_basis(self):
        gen = make_skew_generator(frequencies=[1.0], seed=5)
        m = gen.matrix
        # any orthogonal conjugation of the unit rotation plane keeps the
        # antisymmetric form with |off-diagonal| = 1
        assert m[0, 0] == pytest.approx(0.0, abs=1e-14)
        assert m[0, 1] == pytest.approx(-m[1, 0], abs=1e-14)
        assert abs(m[0, 1]) == pytest.approx(1.0, rel=1e-12)

    def test_same_seed_bitwise_identical(self):
        a = make_skew_generator(dim=7, seed=123)
        b = make_skew_generator(dim=7, seed=123)
        assert np.array_equal(a.matrix, b.matrix)
        c = make_skew_generator(frequencies=[1.0, 2.5], seed=9)
        d = make_skew_generator(frequencies=[1.0, 2.5], seed=9)
        assert np.array_equal(c.matrix, d.matrix)

    def test_spectrum_matches_request(self):
        gen = make_skew_generator(frequencies=[0.5, 2.0, 7.0], seed=3)
        dec = spectral_decompose(gen)
        assert np.allclose(dec.frequencies, [0.5, 2.0, 7.0], rtol=1e-10)

    def test_kernel_padding(self):
        gen = make_skew_generator(frequencies=[1.0], dim=5, seed=0)
        dec = spectral_decompose(gen)
        assert dec.zero_multiplicity == 3
        assert np.allclose(dec.frequencies, [1.0])

    def test_errors(self):
        with pytest.raises(WorkbenchError):
            make_skew_generator(dim=0)
        with pytest.raises(WorkbenchError):
            make_skew_generator(frequencies=[np.inf])
        with pytest.raises(WorkbenchError):
            make_skew_generator()

    def test_constructor_rejects_non_skew(self):
        with pytest.raises(WorkbenchError):
            Generator(matrix=np.eye(2), space=HilbertSpace(2))


class TestPropagate:
    def test_identity_at_time_zero(self):
        gen = make_skew_generator(dim=6, seed=4)
        x = np.random.default_rng(0).standard_normal(6)
        assert np.allclose(propagate(gen, 0.0, x), x, atol=1e-14)

    def test_closed_form_rotation(self):
        gen = Generator(matrix=rotation_matrix_2d(), space=HilbertSpace(2))
        e1 = np.array([1.0, 0.0])
        for t in (0.3, 1.0, 2.7):
            assert np.allclose(propagate(gen, t, e1), [np.cos(t), np.sin(t)], atol=1e-14)
        # opposite orientation
        gen2 = Generator(matrix=-rotation_matrix_2d(), space=HilbertSpace(2))
        t = 0.8
        assert np.allclose(propagate(gen2, t, e1), [np.cos(t), -np.sin(t)], atol=1e-14)

    def test_against_series_oracle(self):
        rng = np.random.default_rng(11)
        for seed in range(5):
            gen = make_skew_generator(dim=6, seed=seed)
            x = rng.standard_normal(6)
            for t in (0.5, 3.0, 19.0):  # ||tL|| <= 20 with unit-scale spectrum
                oracle = taylor_expm_oracle(t * gen.matrix) @ x
                assert np.max(np.abs(propagate(gen, t, x) - oracle)) <= 1e-9

    def test_semigroup_property(self):
        rng = np.random.default_rng(8)
        gen = make_skew_generator(dim=5, seed=2)
        x = rng.standard_normal(5)
        for s, t in [(0.2, 0.9), (1.5, 2.5), (-0.7, 0.7)]:
            two_step = propagate(gen, t, propagate(gen, s, x))
            direct = propagate(gen, t + s, x)
            assert np.max(np.abs(two_step - direct)) <= 1e-10 * max(1.0, np.linalg.norm(x))

    def test_unitarity_hundred_seeded_cases(self):
        rng = np.random.default_rng(77)
        for case in range(100):
            dim = int(rng.integers(2, 10))
            gen = make_skew_generator(dim=dim, seed=case)
            x = rng.standard_normal(dim)
            t = float(rng.uniform(-10, 10))
            nx = norm(gen.space, x)
            assert abs(norm(gen.space, propagate(gen, t, x)) - nx) <= 1e-10 * nx

    def test_skewness_quadratic_form(self):
        rng = np.random.default_rng(5)
        for seed in range(10):
            gen = make_skew_generator(dim=8, seed=seed)
            x = rng.standard_normal(8)
            assert abs(inner(gen.space, gen.apply(x), x)) <= 1e-12 * norm(gen.space, x) ** 2

    def test_dimension_mismatch(self):
        gen = make_skew_generator(dim=3, seed=0)
        with pytest.raises(DimensionMismatchError):
            propagate(gen, 1.0, np.ones(4))

    def test_non_finite_time(self):
        gen = make_skew_generator(dim=2, seed=0)
        with pytest.raises(WorkbenchError):
            propagate(gen, np.nan, np.ones(2))

    def test_series_matches_pointwise(self):
        gen = make_skew_generator(dim=6, seed=9)
        x = np.random.default_rng(1).standard_normal(6)
        times = np.linspace(0.0, 4.0, 9)
        series = propagate_series(gen, x, times)
        for t, row in zip(times, series):
            assert np.allclose(row, propagate(gen, t, x), atol=1e-14)


class TestSpectralDecompose:
    def test_zero_matrix(self):
        gen = Generator(matrix=np.zeros((3, 3)), space=HilbertSpace(3))
        dec = spectral_decompose(gen)
        assert len(dec.frequencies) == 0
        assert dec.zero_multiplicity == 3

    def test_unit_rotation_frequency(self):
        gen = Generator(matrix=rotation_matrix_2d(), space=HilbertSpace(2))
        dec = spectral_decompose(gen)
        assert np.allclose(dec.frequencies, [1.0], rtol=1e-12)
        assert dec.zero_multiplicity == 0

    def test_two_blocks(self):
        gen = block_generator([1.0, 10.0])
        dec = spectral_decompose(gen)
        assert np.allclose(dec.frequencies, [1.0, 10.0], rtol=1e-12)

    def test_frequencies_sorted_ascending(self):
        gen = make_skew_generator(frequencies=[4.0, 0.5, 2.0], seed=1)
        dec = spectral_decompose(gen)
        assert np.all(np.diff(dec.frequencies) >= 0)

    def test_gram_and_reconstruction(self):
        for seed in range(8):
            gen = make_skew_generator(dim=9, seed=seed)
            dec = spectral_decompose(gen)
            assert dec.gram_deviation() <= 1e-10
            rebuilt = dec.reconstruct()
            scale = np.linalg.norm(gen.matrix)
            assert np.linalg.norm(rebuilt - gen.matrix) <= 1e-10 * scale

    def test_degenerate_frequencies_grouped(self):
        gen = make_skew_generator(frequencies=[3.0, 3.0], seed=6)
        dec = spectral_decompose(gen)
        assert np.allclose(dec.frequencies, [3.0, 3.0], rtol=1e-10)
        assert dec.gram_deviation() <= 1e-10
        assert np.linalg.norm(dec.reconstruct() - gen.matrix) <= 1e-10 * np.linalg.norm(gen.matrix)

    def test_weighted_space(self):
        weights = np.array([0.5, 1.0, 2.0, 4.0])
        gen = make_skew_generator(frequencies=[1.0, 2.0], seed=2, weights=weights)
        dec = spectral_decompose(gen)
        assert np.allclose(dec.frequencies, [1.0, 2.0], rtol=1e-10)
        assert dec.gram_deviation() <= 1e-10
        assert np.linalg.norm(dec.reconstruct() - gen.matrix) <= 1e-10 * np.linalg.norm(gen.matrix)
        x = np.random.default_rng(3).standard_normal(4)
        nx = norm(gen.space, x)
        assert abs(norm(gen.space, propagate(gen, 2.3, x)) - nx) <= 1e-10 * nx
