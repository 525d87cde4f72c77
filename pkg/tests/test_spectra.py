import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from locc.errors import ContractError, LayoutError
from locc.random_ops import ginibre, random_density, random_hermitian, random_qbasis, random_unitary
from locc.spectra import (
    Spectrum,
    WeightedSpectra,
    add_spectra,
    c_majorizes,
    check_conjugate_spectra,
    check_subadditivity,
    fan_weight,
    majorizes,
    mix_spectra,
    prefix_margins,
    spectrum_of,
)
from oracles import eigenvalues_desc, majorizes_loop

seeds = st.integers(0, 2**32 - 1)


def simplex(n):
    return st.lists(st.floats(0, 1), min_size=n, max_size=n).filter(lambda v: sum(v) > 1e-3).map(
        lambda v: [x / sum(v) for x in v]
    )


prob_vectors = st.integers(1, 6).flatmap(simplex)


class TestSpectrum:
    def test_sorted_and_clamped(self):
        s = Spectrum([0.2, -1e-12, 0.8])
        assert s.values == (0.8, 0.2, 0.0)

    def test_state_checks(self):
        with pytest.raises(ContractError):
            Spectrum([0.5, 0.6])
        with pytest.raises(ContractError):
            Spectrum([1.1, -0.1])
        assert Spectrum([2.0, -1.0], state=False).values == (2.0, -1.0)

    def test_padding_is_not_stored(self):
        s = Spectrum([1.0])
        assert len(s) == 1
        np.testing.assert_allclose(s.padded(3), [1, 0, 0])

    def test_spectrum_of_maximally_mixed(self):
        assert spectrum_of(np.eye(2) / 2).values == pytest.approx((0.5, 0.5))

    def test_spectrum_of_rejects_non_hermitian(self):
        with pytest.raises(ContractError):
            spectrum_of(np.array([[0.5, 1], [0, 0.5]]))

    @given(seed=seeds, d=st.integers(1, 6))
    def test_spectrum_of_matches_general_solver(self, seed, d):
        rho = random_density(d, np.random.default_rng(seed))
        np.testing.assert_allclose(spectrum_of(rho).values, eigenvalues_desc(rho), atol=1e-9)


class TestMajorization:
    def test_pure_majorizes_everything(self):
        assert majorizes([1, 0], [0.5, 0.5])
        assert not majorizes([0.5, 0.5], [0.7, 0.3])
        assert majorizes([0.6, 0.4], [0.6, 0.4]) and majorizes([0.6, 0.4], [0.6, 0.4])

    def test_padding_across_lengths(self):
        assert majorizes([1.0], [0.5, 0.25, 0.25])
        assert not majorizes([0.25] * 4, [0.5, 0.5])

    @given(a=prob_vectors, b=prob_vectors)
    def test_agrees_with_loop_oracle(self, a, b):
        assert majorizes(a, b) == majorizes_loop(a, b)

    @given(a=prob_vectors, b=prob_vectors, c=prob_vectors)
    def test_reflexive_and_transitive(self, a, b, c):
        assert majorizes(a, a)
        if majorizes(a, b, 0) and majorizes(b, c, 0):
            assert majorizes(a, c)

    @given(a=prob_vectors)
    def test_extremes(self, a):
        n = len(a)
        assert majorizes([1.0], a)
        assert majorizes(a, [1 / n] * n)

    def test_hand_c_example(self):
        assert c_majorizes([0.6, 0.4], [0.9, 0.1], 0.7)
        assert not c_majorizes([0.6, 0.4], [0.9, 0.1], 0.8)

    @given(a=prob_vectors, b=prob_vectors, c=st.floats(-2, 1), d=st.floats(-2, 1))
    def test_c_majorization_monotone(self, a, b, c, d):
        hi, lo = max(c, d), min(c, d)
        if c_majorizes(a, b, hi):
            assert c_majorizes(a, b, lo)
        assert c_majorizes(a, b, hi) == majorizes_loop(a, b, slack=1 - hi)

    @given(a=prob_vectors, b=prob_vectors, c=st.floats(-5, 0))
    def test_c_nonpositive_always_holds(self, a, b, c):
        assert c_majorizes(a, b, c)

    @given(a=prob_vectors, b=prob_vectors, c=st.floats(1 + 1e-6, 3))
    def test_c_above_one_never_holds(self, a, b, c):
        assert not c_majorizes(a, b, c)

    @given(a=prob_vectors, b=prob_vectors)
    def test_c_one_is_majorization(self, a, b):
        assert c_majorizes(a, b, 1.0) == majorizes(a, b)

    def test_margins(self):
        np.testing.assert_allclose(prefix_margins([0.7, 0.3], [0.5, 0.5]), [0.2, 0.0])


class TestMixing:
    def test_single(self):
        s = Spectrum([0.7, 0.3])
        assert mix_spectra([(1.0, s)]).values == s.values

    def test_sorting_precedes_mixing(self):
        out = mix_spectra([(0.5, Spectrum([1, 0])), (0.5, Spectrum([0, 1]))])
        assert out.values == (1.0, 0.0)

    def test_appendix_like_mixture(self):
        out = mix_spectra([(0.1, Spectrum([0.872677996249965, 0.127322003750035])), (0.9, Spectrum([1.0, 0.0]))])
        np.testing.assert_allclose(out.values, [0.987267799624996, 0.0127322003750035], atol=1e-12)

    def test_unnormalized_weights(self):
        with pytest.raises(ContractError):
            WeightedSpectra([(0.5, Spectrum([1.0]))])
        with pytest.raises(ContractError):
            WeightedSpectra([(1.5, Spectrum([1.0])), (-0.5, Spectrum([1.0]))])

    @given(seed=seeds, k=st.integers(1, 4))
    def test_prefix_sums_are_linear(self, seed, k):
        rng = np.random.default_rng(seed)
        ps = rng.dirichlet(np.ones(k))
        specs = [spectrum_of(random_density(int(rng.integers(1, 5)), rng)) for _ in range(k)]
        out = mix_spectra(list(zip(ps, specs)))
        n = len(out)
        expected = sum(p * s.prefix_sums(n) for p, s in zip(ps, specs))
        np.testing.assert_allclose(out.prefix_sums(n), expected, atol=1e-12)

    def test_add(self):
        assert add_spectra([2, 1], [3, 0]).values == (5.0, 1.0)


class TestFan:
    def test_diagonal(self):
        a = np.diag([3.0, 2.0, 1.0])
        e = np.eye(3)
        assert fan_weight(a, [e[0], e[1]]) == pytest.approx(5)
        assert fan_weight(a, [e[1], e[2]]) == pytest.approx(3)
        assert fan_weight(a, e[:, :2]) == pytest.approx(5)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ContractError):
            fan_weight(np.eye(2), [[1, 0], [1, 0]])
        with pytest.raises(ContractError):
            fan_weight(np.array([[0, 1], [0, 0]]), [[1, 0]])
        with pytest.raises(LayoutError):
            fan_weight(np.eye(3), [[1, 0]])

    @given(seed=seeds, d=st.integers(2, 6), data=st.data())
    def test_bounded_by_top_eigenvalues(self, seed, d, data):
        q = data.draw(st.integers(1, d))
        rng = np.random.default_rng(seed)
        a = random_hermitian(d, rng)
        top = sum(eigenvalues_desc(a)[:q])
        assert fan_weight(a, random_qbasis(d, q, rng)) <= top + 1e-9
        w, v = np.linalg.eigh(a)
        assert fan_weight(a, v[:, ::-1][:, :q]) == pytest.approx(top, abs=1e-9)


class TestSubadditivityAndConjugates:
    def test_commuting(self):
        assert check_subadditivity(np.diag([2.0, 1.0]), np.diag([3.0, 0.0]))

    def test_closed_form(self):
        a = np.diag([1.0, 0.0])
        b = np.array([[0.0, 1.0], [1.0, 0.0]])
        s = spectrum_of(a + b, state=False)
        np.testing.assert_allclose(s.values, [(1 + 5**0.5) / 2, (1 - 5**0.5) / 2])
        assert check_subadditivity(a, b)

    def test_dimension_mismatch(self):
        with pytest.raises(LayoutError):
            check_subadditivity(np.eye(2), np.eye(3))

    @given(seed=seeds, d=st.integers(1, 6))
    def test_subadditivity_random(self, seed, d):
        rng = np.random.default_rng(seed)
        assert check_subadditivity(random_hermitian(d, rng), random_hermitian(d, rng))

    def test_conjugate_examples(self, rng):
        assert check_conjugate_spectra(random_unitary(3, rng))
        assert check_conjugate_spectra(np.array([[0, 1], [0, 0]]))
        with pytest.raises(ContractError):
            check_conjugate_spectra(np.ones((2, 3)))

    @given(seed=seeds, d=st.integers(1, 6))
    def test_conjugate_random(self, seed, d):
        rng = np.random.default_rng(seed)
        f = ginibre(d, rng)
        assert check_conjugate_spectra(f)
        a = eigenvalues_desc(f.conj().T @ f)
        b = eigenvalues_desc(f @ f.conj().T)
        assume(max(a) < 1e6)
        np.testing.assert_allclose(a, b, atol=1e-9)
