import numpy as np
import pytest

from nvspin import linalg
from nvspin._kernels import pure
from nvspin.errors import NotHermitianError


def random_hermitian(rng, n):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return x + x.conj().T


def kron_bruteforce(a, b):
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


class TestKron:
    def test_identity_times_identity(self):
        assert np.array_equal(linalg.kron(np.eye(2), np.eye(3)), np.eye(6))

    def test_diagonal_case(self):
        got = linalg.kron(np.diag([1.0, -1.0]), np.eye(2))
        assert np.array_equal(got, np.diag([1.0, 1.0, -1.0, -1.0]))

    def test_matches_bruteforce_index_formula(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert np.array_equal(linalg.kron(a, b), kron_bruteforce(a, b))

    def test_rectangular(self):
        rng = np.random.default_rng(8)
        a = rng.normal(size=(2, 3))
        b = rng.normal(size=(4, 2))
        got = linalg.kron(a, b)
        assert got.shape == (8, 6)
        assert np.array_equal(got, kron_bruteforce(a.astype(complex), b.astype(complex)))

    def test_associative_on_integer_matrices(self):
        rng = np.random.default_rng(9)
        a = rng.integers(-3, 4, size=(2, 2)).astype(complex)
        b = rng.integers(-3, 4, size=(2, 2)).astype(complex)
        c = rng.integers(-3, 4, size=(3, 3)).astype(complex)
        left = linalg.kron(linalg.kron(a, b), c)
        right = linalg.kron(a, linalg.kron(b, c))
        assert np.array_equal(left, right)

    def test_matches_numpy(self):
        rng = np.random.default_rng(10)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        assert np.allclose(linalg.kron(a, b), np.kron(a, b), rtol=0, atol=0)


class TestEigh:
    def test_diagonal_input_sorted(self):
        dec = linalg.eigh(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(dec.eigenvalues, [1.0, 2.0, 3.0], atol=1e-14)

    def test_pauli_x_spectrum(self):
        sx = np.array([[0.0, 1.0], [1.0, 0.0]])
        dec = linalg.eigh(sx)
        assert np.allclose(dec.eigenvalues, [-1.0, 1.0], atol=1e-14)

    def test_random_hermitian_invariants(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            h = random_hermitian(rng, 6)
            dec = linalg.eigh(h)
            scale = np.linalg.norm(h)
            assert np.all(np.diff(dec.eigenvalues) >= 0)
            v = dec.eigenvectors
            for k in range(6):
                resid = h @ v[:, k] - dec.eigenvalues[k] * v[:, k]
                assert np.linalg.norm(resid) <= 1e-11 * scale
            assert np.linalg.norm(v.conj().T @ v - np.eye(6)) <= 1e-11
            assert np.linalg.norm(dec.reconstruct() - h) <= 1e-10 * scale

    def test_matches_numpy_spectrum(self):
        rng = np.random.default_rng(12)
        for n in (2, 3, 6, 8):
            h = random_hermitian(rng, n)
            dec = linalg.eigh(h)
            assert np.allclose(dec.eigenvalues, np.linalg.eigvalsh(h),
                               rtol=1e-12, atol=1e-12 * np.linalg.norm(h))

    def test_spectrum_invariant_under_unitary_conjugation(self):
        rng = np.random.default_rng(13)
        h = random_hermitian(rng, 6)
        u = linalg.eigh(random_hermitian(rng, 6)).eigenvectors
        w1 = linalg.eigh(h).eigenvalues
        w2 = linalg.eigh(u.conj().T @ h @ u).eigenvalues
        assert np.allclose(w1, w2, rtol=1e-10, atol=1e-10 * np.linalg.norm(h))

    def test_rejects_non_hermitian(self):
        m = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(NotHermitianError):
            linalg.eigh(m)

    def test_rejects_non_square(self):
        with pytest.raises(NotHermitianError):
            linalg.eigh(np.zeros((2, 3)))

    def test_zero_matrix(self):
        dec = linalg.eigh(np.zeros((4, 4)))
        assert np.array_equal(dec.eigenvalues, np.zeros(4))

    def test_pure_backend_agrees_with_active(self):
        rng = np.random.default_rng(14)
        h = random_hermitian(rng, 6)
        w_pure, v_pure, ok = pure.jacobi_eigh(h)
        assert ok
        dec = linalg.eigh(h)
        assert np.allclose(w_pure, dec.eigenvalues, rtol=1e-12,
                           atol=1e-12 * np.linalg.norm(h))
        assert np.allclose((v_pure * w_pure) @ v_pure.conj().T, h,
                           atol=1e-10 * np.linalg.norm(h))


class TestExpm:
    def test_zero_time_is_identity(self):
        rng = np.random.default_rng(15)
        h = random_hermitian(rng, 4)
        assert np.allclose(linalg.expm_hermitian_generator(h, 0.0), np.eye(4),
                           atol=1e-14)

    def test_pauli_z_phase(self):
        h = (np.pi / 2.0) * np.diag([1.0, -1.0])
        u = linalg.expm_hermitian_generator(h, 1.0)
        expected = np.diag([np.exp(-1j * np.pi / 2), np.exp(1j * np.pi / 2)])
        assert np.allclose(u, expected, atol=1e-14)

    def test_unitarity_and_determinant(self):
        rng = np.random.default_rng(16)
        h = random_hermitian(rng, 6)
        u = linalg.expm_hermitian_generator(h, 1.0)
        assert np.linalg.norm(u @ u.conj().T - np.eye(6)) <= 1e-10
        assert abs(abs(np.linalg.det(u)) - 1.0) <= 1e-9

    def test_group_property(self):
        rng = np.random.default_rng(17)
        h = random_hermitian(rng, 6)
        u1 = linalg.expm_hermitian_generator(h, 0.37)
        u2 = linalg.expm_hermitian_generator(h, 1.21)
        u12 = linalg.expm_hermitian_generator(h, 0.37 + 1.21)
        assert np.linalg.norm(u1 @ u2 - u12) <= 1e-9

    def test_rejects_non_finite_time(self):
        with pytest.raises(ValueError):
            linalg.expm_hermitian_generator(np.eye(2), np.inf)


class TestLabPropagator:
    def test_backends_agree(self):
        from nvspin import _kernels
        rng = np.random.default_rng(18)
        h = random_hermitian(rng, 6)
        g = np.zeros((6, 6), dtype=complex)
        g[0, 3] = g[3, 0] = 1.0
        args = (h, g, 2.0, 50.0, 0.3, 0.8, 64)
        u_active = np.asarray(_kernels.propagate_drive_lab(*args))
        u_pure = pure.propagate_drive_lab(*args)
        assert np.allclose(u_active, u_pure, atol=1e-12)
        assert np.linalg.norm(u_active @ u_active.conj().T - np.eye(6)) <= 1e-10

    def test_constant_drive_matches_expm(self):
        # omega = 0 makes the drive constant, so the result is one exponential
        rng = np.random.default_rng(19)
        h = random_hermitian(rng, 4)
        g = random_hermitian(rng, 4)
        from nvspin import _kernels
        u = np.asarray(_kernels.propagate_drive_lab(h, g, 0.7, 0.0, 0.0, 0.5, 40))
        expected = linalg.expm_hermitian_generator(h + 0.7 * g, 0.5)
        assert np.allclose(u, expected, atol=1e-10)
