import numpy as np
import pytest

from memloss.linalg import (
    DensityMatrix,
    Evolver,
    PureState,
    SubsystemLayout,
    embed_subspace,
    evolve,
    fidelity,
    haar_state,
    haar_unitary,
    kron,
    max_entangled,
    maximally_mixed,
    partial_trace,
    purified_distance,
    random_density,
    trace_distance,
    trace_norm,
)


class TestLayout:
    def test_basic(self):
        lay = SubsystemLayout.of(("S", 4), ("E", 16))
        assert lay.dim == 64
        assert lay.names == ("S", "E")
        assert lay.dim_of("E") == 16
        assert lay.position("E") == 1

    def test_restrict_keeps_order(self):
        lay = SubsystemLayout.of(("A", 2), ("B", 3), ("C", 5))
        assert lay.restrict({"C", "A"}).names == ("A", "C")

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            SubsystemLayout.of(("A", 2), ("A", 3))


class TestStates:
    def test_density_validation(self):
        with pytest.raises(ValueError):
            DensityMatrix.single(np.array([[0.5, 0.6], [0.6, 0.5]]))
        with pytest.raises(ValueError):
            DensityMatrix.single(np.diag([1.5, 0.5]))

    def test_subnormalized_allowed(self):
        dm = DensityMatrix.single(np.diag([0.4, 0.3]))
        assert abs(dm.trace - 0.7) < 1e-12

    def test_pure_norm(self):
        with pytest.raises(ValueError):
            PureState.single(np.array([1.0, 1.0]))

    def test_spectrum_descending(self):
        dm = DensityMatrix.single(np.diag([0.1, 0.6, 0.3]))
        assert np.allclose(dm.spectrum(), [0.6, 0.3, 0.1])


class TestPartialTrace:
    def test_product_state(self):
        a = random_density(2, 0, name="A")
        b = random_density(3, 1, name="B")
        joint = DensityMatrix(np.kron(a.data, b.data),
                              SubsystemLayout.of(("A", 2), ("B", 3)))
        assert np.allclose(joint.marginal("A").data, a.data)
        assert np.allclose(joint.marginal("B").data, b.data)

    def test_max_entangled_marginals_flat(self):
        psi = max_entangled(3)
        assert np.allclose(psi.marginal("A").data, np.eye(3) / 3)

    def test_three_factor(self):
        rng = np.random.default_rng(0)
        dims = (2, 3, 2)
        g = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        m = g @ g.conj().T
        m /= m.trace().real
        lay = SubsystemLayout.of(("A", 2), ("B", 3), ("C", 2))
        dm = DensityMatrix(m, lay)
        # oracle: einsum over the explicit tensor legs
        t = m.reshape(dims + dims)
        want = np.einsum("abcade->bcde", t).reshape(6, 6)
        got = partial_trace(dm, {"B", "C"})
        assert np.allclose(got.data, want)
        assert got.layout.names == ("B", "C")


class TestEvolution:
    def test_unitary_matches_expm(self):
        from scipy.linalg import expm
        rng = np.random.default_rng(3)
        g = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        h = (g + g.conj().T) / 2
        assert np.allclose(evolve(h, 0.7), expm(-1j * 0.7 * h), atol=1e-10)

    def test_evolver_composition(self):
        rng = np.random.default_rng(4)
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        ev = Evolver((g + g.conj().T) / 2)
        assert np.allclose(ev.unitary(1.0) @ ev.unitary(2.0), ev.unitary(3.0))
        assert np.allclose(ev.unitary(0.0), np.eye(4))


class TestDistances:
    def test_trace_distance_diagonal(self):
        a = DensityMatrix.single(np.diag([1.0, 0.0]))
        b = DensityMatrix.single(np.diag([0.75, 0.25]))
        assert abs(trace_distance(a, b) - 0.5) < 1e-12

    def test_orthogonal_pure_states_at_two(self):
        a = DensityMatrix.single(np.diag([1.0, 0.0]))
        b = DensityMatrix.single(np.diag([0.0, 1.0]))
        assert abs(trace_distance(a, b) - 2.0) < 1e-12

    def test_trace_norm_pure(self):
        v = haar_state(4, 0)
        assert abs(trace_norm(v.density()) - 1.0) < 1e-12

    def test_fidelity_pure_vs_mixed(self):
        ket0 = DensityMatrix.single(np.diag([1.0, 0.0]))
        assert abs(fidelity(ket0, maximally_mixed(2)) - 1 / np.sqrt(2)) < 1e-12

    def test_fidelity_pure_overlap(self):
        a = haar_state(3, 1)
        b = haar_state(3, 2)
        ov = abs(np.vdot(a.amplitudes, b.amplitudes))
        assert abs(fidelity(a, b) - ov) < 1e-10

    def test_purified_distance_scaling(self):
        # scaling a state down to (1 - eps^2) of its weight sits exactly at
        # purified distance eps
        rho = random_density(3, 5)
        eps = 0.25
        scaled = (1 - eps**2) * rho.data
        assert abs(purified_distance(rho.data, scaled) - eps) < 1e-10

    def test_fuchs_van_de_graaf(self):
        for seed in range(20):
            a = random_density(3, seed)
            b = random_density(3, 100 + seed)
            f = fidelity(a, b)
            td = trace_distance(a, b)
            assert 2 * (1 - f) - 1e-10 <= td <= 2 * np.sqrt(1 - f * f) + 1e-10


class TestRandomStates:
    def test_haar_overlap_moment(self):
        # <|<0|phi>|^2> = 1/d for Haar states
        rng = np.random.default_rng(11)
        n = 100_000
        tot = 0.0
        for _ in range(n):
            v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            tot += abs(v[0]) ** 2 / (abs(v[0]) ** 2 + abs(v[1]) ** 2)
        assert abs(tot / n - 0.5) < 0.005

    def test_haar_state_deterministic(self):
        a = haar_state(5, 42)
        b = haar_state(5, 42)
        assert np.array_equal(a.amplitudes, b.amplitudes)
        assert abs(np.linalg.norm(a.amplitudes) - 1) < 1e-12

    def test_haar_unitary(self):
        u = haar_unitary(6, 3)
        assert np.allclose(u @ u.conj().T, np.eye(6), atol=1e-10)

    def test_random_density_rank(self):
        dm = random_density(4, 0, rank=2)
        assert np.linalg.matrix_rank(dm.data, tol=1e-10) == 2


class TestEmbedding:
    def test_max_entangled_reorder(self):
        psi = max_entangled(4)
        amp = psi.amplitudes.reshape(4, 4)
        assert np.allclose(amp, np.eye(4) / 2)

    def test_embed_subspace(self):
        iso = np.zeros((4, 2))
        iso[0, 0] = iso[2, 1] = 1.0
        rho = maximally_mixed(2)
        out = embed_subspace(rho, iso)
        assert abs(out[0, 0] - 0.5) < 1e-12 and abs(out[1, 1]) < 1e-12

    def test_embed_rejects_nonisometry(self):
        with pytest.raises(ValueError):
            embed_subspace(maximally_mixed(2), np.ones((4, 2)))

    def test_kron_vectors(self):
        a = PureState.single(np.array([1.0, 0.0]))
        b = PureState.single(np.array([0.0, 1.0]))
        assert np.allclose(kron(a, b), [0, 1, 0, 0])
