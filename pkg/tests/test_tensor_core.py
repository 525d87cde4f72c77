import numpy as np
import pytest
from hypothesis import given, strategies as st

from locc.errors import ContractError, LayoutError, TransformError
from locc.random_ops import random_density, random_unitary, ginibre
from locc.tensor_core import (
    GlobalState,
    LocalOperator,
    PartyLayout,
    conjugate,
    hermitian_eig,
    hermitize,
    kron,
    lift_local,
    partial_trace,
    psd_sqrt,
    reconstruction_error,
    require_density,
    validate_density,
)
from oracles import eigenvalues_desc, ptrace_basis_sum

LAYOUTS = [[2, 2], [2, 3], [3, 2], [2, 2, 2], [2, 3, 2], [4, 2]]
seeds = st.integers(0, 2**32 - 1)


def basis(d, k):
    e = np.zeros(d)
    e[k] = 1
    return e


class TestLayout:
    def test_dims_and_total(self):
        lay = PartyLayout([2, 3, 4])
        assert lay.n == 3 and lay.total == 24
        assert lay.dim(2) == 3
        assert list(lay.parties()) == [1, 2, 3]

    @pytest.mark.parametrize("dims", [[], [0], [2, -1]])
    def test_rejects_bad_dims(self, dims):
        with pytest.raises(LayoutError):
            PartyLayout(dims)

    def test_party_range(self):
        with pytest.raises(LayoutError):
            PartyLayout([2, 2]).dim(3)
        with pytest.raises(LayoutError):
            PartyLayout([2, 2]).dim(0)

    def test_index_convention(self):
        # |k1 k2 k3> sits at 4 k1 + 2 k2 + k3: party 1 is most significant
        v = kron(kron(basis(2, 1).reshape(-1, 1), basis(2, 0).reshape(-1, 1)), basis(2, 1).reshape(-1, 1))
        assert np.argmax(np.abs(v)) == 5


class TestPartialTrace:
    def test_product_state(self):
        a = np.array([[0.75, 0.25], [0.25, 0.25]])
        b = np.diag([0.1, 0.9])
        m = np.kron(a, b)
        np.testing.assert_allclose(partial_trace(m, [2, 2], 1), a)
        np.testing.assert_allclose(partial_trace(m, [2, 2], 2), b)

    def test_bell_state_is_maximally_mixed(self):
        psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        s = GlobalState.from_vector([2, 2], psi)
        np.testing.assert_allclose(s.local(1), np.eye(2) / 2)

    def test_keep_all_is_identity(self, rng):
        m = ginibre(6, rng)
        np.testing.assert_allclose(partial_trace(m, [2, 3], [1, 2]), m)

    def test_keep_order_is_party_order(self, rng):
        m = random_density(8, rng)
        np.testing.assert_allclose(partial_trace(m, [2, 2, 2], [3, 1]), partial_trace(m, [2, 2, 2], [1, 3]))

    def test_shape_mismatch(self):
        with pytest.raises(LayoutError):
            partial_trace(np.eye(5), [2, 2], 1)

    @given(seed=seeds, k=st.integers(0, len(LAYOUTS) - 1))
    def test_matches_basis_sum(self, seed, k):
        rng = np.random.default_rng(seed)
        dims = LAYOUTS[k]
        m = ginibre(int(np.prod(dims)), rng)
        for p in range(1, len(dims) + 1):
            np.testing.assert_allclose(partial_trace(m, dims, p), ptrace_basis_sum(m, dims, [p]), atol=1e-12)
        if len(dims) == 3:
            np.testing.assert_allclose(partial_trace(m, dims, [1, 3]), ptrace_basis_sum(m, dims, [1, 3]), atol=1e-12)

    @given(seed=seeds, k=st.integers(0, len(LAYOUTS) - 1))
    def test_linear_and_adjoint(self, seed, k):
        rng = np.random.default_rng(seed)
        dims = LAYOUTS[k]
        n = int(np.prod(dims))
        a, b = ginibre(n, rng), ginibre(n, rng)
        c = complex(rng.standard_normal(), rng.standard_normal())
        lhs = partial_trace(a + c * b, dims, 1)
        np.testing.assert_allclose(lhs, partial_trace(a, dims, 1) + c * partial_trace(b, dims, 1), atol=1e-12)
        np.testing.assert_allclose(partial_trace(a.conj().T, dims, 1), partial_trace(a, dims, 1).conj().T, atol=1e-12)

    @given(seed=seeds, k=st.integers(0, len(LAYOUTS) - 1))
    def test_preserves_trace_and_psd(self, seed, k):
        rng = np.random.default_rng(seed)
        dims = LAYOUTS[k]
        rho = random_density(int(np.prod(dims)), rng, rank=int(rng.integers(1, 3)))
        for p in range(1, len(dims) + 1):
            r = partial_trace(rho, dims, p)
            assert abs(np.trace(r) - 1) < 1e-12
            assert np.linalg.eigvalsh(r).min() >= -1e-10

    @given(seed=seeds)
    def test_commutation_and_self_trace(self, seed):
        rng = np.random.default_rng(seed)
        da, db = 2, 3
        m = ginibre(da * db, rng)
        g_b = ginibre(db, rng)
        g_a = ginibre(da, rng)
        ib = np.kron(np.eye(da), g_b)
        np.testing.assert_allclose(partial_trace(m @ ib, [da, db], 1), partial_trace(ib @ m, [da, db], 1), atol=1e-12)
        ia = np.kron(g_a, np.eye(db))
        np.testing.assert_allclose(partial_trace(m @ ia, [da, db], 1), partial_trace(m, [da, db], 1) @ g_a, atol=1e-12)
        np.testing.assert_allclose(partial_trace(ia @ m, [da, db], 1), g_a @ partial_trace(m, [da, db], 1), atol=1e-12)

    @given(seed=seeds)
    def test_nesting(self, seed):
        rng = np.random.default_rng(seed)
        dims = [2, 3, 2]
        m = ginibre(12, rng)
        stepwise = partial_trace(partial_trace(m, dims, [1, 2]), [2, 3], 1)
        np.testing.assert_allclose(stepwise, partial_trace(m, dims, 1), atol=1e-12)

    @given(seed=seeds)
    def test_local_unitaries_conjugate_the_marginal(self, seed):
        rng = np.random.default_rng(seed)
        ua, ub = random_unitary(2, rng), random_unitary(3, rng)
        sigma = random_density(6, rng)
        u = np.kron(ua, ub)
        lhs = partial_trace(u @ sigma @ u.conj().T, [2, 3], 1)
        np.testing.assert_allclose(lhs, ua @ partial_trace(sigma, [2, 3], 1) @ ua.conj().T, atol=1e-10)


class TestLiftAndConjugate:
    def test_lift_matches_kron(self, rng):
        f = ginibre(3, rng)
        big = lift_local(LocalOperator(2, f), [2, 3, 2])
        np.testing.assert_allclose(big, np.kron(np.kron(np.eye(2), f), np.eye(2)))

    def test_lift_shape_mismatch(self):
        with pytest.raises(LayoutError):
            lift_local(LocalOperator(1, np.eye(3)), [2, 2])

    def test_local_operator_must_be_square(self):
        with pytest.raises(LayoutError):
            LocalOperator(1, np.ones((2, 3)))

    def test_conjugate_renormalizes(self, rng):
        s = GlobalState([2, 2], random_density(4, rng))
        out = conjugate(s, np.kron(np.diag([1, 0]), np.eye(2)))
        assert abs(np.trace(out.rho) - 1) < 1e-12
        assert validate_density(out).passed

    def test_conjugate_annihilated(self):
        s = GlobalState.from_vector([2, 2], [1, 0, 0, 0])
        with pytest.raises(TransformError, match="cannot be transformed"):
            conjugate(s, np.kron(np.diag([0, 1]), np.eye(2)))

    def test_state_is_read_only(self):
        s = GlobalState.from_vector([2], [1, 0])
        with pytest.raises(ValueError):
            s.rho[0, 0] = 2


class TestEigen:
    @given(seed=seeds, d=st.integers(1, 8))
    def test_reconstruction(self, seed, d):
        rng = np.random.default_rng(seed)
        g = ginibre(d, rng)
        h = (g + g.conj().T) / 2
        w, v = hermitian_eig(h)
        assert reconstruction_error(h, w, v) < 1e-9
        np.testing.assert_allclose(v.conj().T @ v, np.eye(d), atol=1e-9)
        np.testing.assert_allclose(sorted(w, reverse=True), eigenvalues_desc(h), atol=1e-9)

    def test_known_values(self):
        w, _ = hermitian_eig(np.array([[2, 1j], [-1j, 2]]))
        np.testing.assert_allclose(sorted(w), [1, 3])

    def test_rejects_non_hermitian(self):
        with pytest.raises(ContractError):
            hermitize(np.array([[0, 1], [0, 0]]))

    def test_absorbs_roundoff(self):
        m = np.array([[1, 0.5 + 1e-12], [0.5, 1]])
        np.testing.assert_allclose(hermitize(m), hermitize(m).conj().T)

    def test_psd_sqrt(self, rng):
        rho = random_density(4, rng)
        r = psd_sqrt(rho)
        np.testing.assert_allclose(r @ r, rho, atol=1e-12)
        np.testing.assert_allclose(psd_sqrt(np.diag([1.0, -1e-12])), np.diag([1.0, 0.0]), atol=1e-15)
        with pytest.raises(ContractError):
            psd_sqrt(np.diag([1.0, -1e-3]))


class TestValidateDensity:
    def test_valid(self, rng):
        rep = validate_density(random_density(3, rng))
        assert rep.passed and bool(rep)

    @pytest.mark.parametrize(
        "m",
        [np.diag([0.6, 0.6]), np.diag([1.2, -0.2]), np.array([[0.5, 0.5], [0.0, 0.5]])],
        ids=["trace", "negative", "hermiticity"],
    )
    def test_invalid(self, m):
        assert not validate_density(m).passed
        with pytest.raises(ContractError):
            require_density(GlobalState([2], m))

    def test_report_fields(self):
        rep = validate_density(np.diag([1.2, -0.2]))
        assert rep.min_eigenvalue == pytest.approx(-0.2)
        assert rep.trace_defect == pytest.approx(0.0, abs=1e-15)
