import math

import numpy as np
import pytest

from nvspin import linalg
from nvspin.errors import AmbiguousLabelingError, UnsupportedSpinError
from nvspin.hamiltonian import (
    BASIS,
    GYROMAGNETIC_E,
    GYROMAGNETIC_N15,
    HYPERFINE_PAR_N15,
    HYPERFINE_PERP_N15,
    ZERO_FIELD_SPLITTING,
    HamiltonianParams,
    build_hamiltonian,
    label_levels,
    labeled_spectrum,
    spin_matrices,
    spin_operators,
    transition_frequencies,
)

TWO_PI = 2.0 * math.pi


# -- independent oracle: matrix elements from ladder-operator formulas -------

def ladder_elements(j, m_row, m_col):
    """(jx, jy, jz) matrix elements <m_row|.|m_col> from first principles."""
    jz = m_col if m_row == m_col else 0.0
    cp = math.sqrt(j * (j + 1) - m_col * (m_col + 1)) if m_row == m_col + 1 else 0.0
    cm = math.sqrt(j * (j + 1) - m_col * (m_col - 1)) if m_row == m_col - 1 else 0.0
    jx = 0.5 * (cp + cm)
    jy = (cp - cm) / 2j
    return jx, jy, jz


def hamiltonian_bruteforce(p):
    """Eq-by-eq matrix elements <m_S', m_I'|H|m_S, m_I> built in a flat loop."""
    ms_vals = [1, 0, -1]
    mi_vals = [0.5, -0.5]
    states = [(ms, mi) for ms in ms_vals for mi in mi_vals]
    h = np.zeros((6, 6), dtype=complex)
    for r, (ms_r, mi_r) in enumerate(states):
        for c, (ms_c, mi_c) in enumerate(states):
            sx, sy, sz = ladder_elements(1.0, ms_r, ms_c)
            ix, iy, iz = ladder_elements(0.5, mi_r, mi_c)
            ds = 1.0 if ms_r == ms_c else 0.0
            dn = 1.0 if mi_r == mi_c else 0.0
            val = p.d * (ms_c**2) * ds * dn
            val += p.gamma_e * (p.b_x * sx + p.b_y * sy + p.b_z * sz) * dn
            val -= p.gamma_n * (p.b_x * ix + p.b_y * iy + p.b_z * iz) * ds
            val += p.a_par * (ms_c * ds) * (mi_c * dn)
            val += p.a_perp * (sx * ix + sy * iy)
            h[r, c] = val
    return h


def block_oracle_frequencies(p):
    """Transition frequencies at theta=0 from the conserved m_S+m_I blocks.

    With the field along the NV axis the Hamiltonian splits into 1x1 and 2x2
    blocks, so each level is a closed-form expression.
    """
    assert p.theta == 0.0
    d, ge, gn, ap, at, b = p.d, p.gamma_e, p.gamma_n, p.a_par, p.a_perp, p.b
    m = at / math.sqrt(2.0)

    def diag(ms, mi):
        return d * ms**2 + ge * b * ms - gn * b * mi + ap * ms * mi

    def two_level(e_low, e_high):
        mean = 0.5 * (e_low + e_high)
        half = 0.5 * (e_high - e_low)
        r = math.hypot(half, m)
        return mean - r, mean + r

    e_0dn, e_m1up = two_level(diag(0, -0.5), diag(-1, 0.5))
    e_0up, e_p1dn = two_level(diag(0, 0.5), diag(1, -0.5))
    e_m1dn = diag(-1, -0.5)
    e_p1up = diag(1, 0.5)
    return {
        (0, 0.5): e_0up, (0, -0.5): e_0dn,
        (-1, 0.5): e_m1up, (-1, -0.5): e_m1dn,
        (1, 0.5): e_p1up, (1, -0.5): e_p1dn,
    }


class TestSpinMatrices:
    def test_spin_half_jz(self):
        _, _, jz = spin_matrices(1)
        assert np.allclose(jz, np.diag([0.5, -0.5]))

    def test_spin_one_jz(self):
        _, _, jz = spin_matrices(2)
        assert np.allclose(jz, np.diag([1.0, 0.0, -1.0]))

    @pytest.mark.parametrize("two_j", [1, 2])
    def test_commutators(self, two_j):
        jx, jy, jz = spin_matrices(two_j)
        assert np.max(np.abs(jx @ jy - jy @ jx - 1j * jz)) <= 1e-14
        assert np.max(np.abs(jy @ jz - jz @ jy - 1j * jx)) <= 1e-14
        assert np.max(np.abs(jz @ jx - jx @ jz - 1j * jy)) <= 1e-14

    @pytest.mark.parametrize("two_j", [1, 2])
    def test_casimir(self, two_j):
        jx, jy, jz = spin_matrices(two_j)
        j = two_j / 2.0
        total = jx @ jx + jy @ jy + jz @ jz
        assert np.allclose(total, j * (j + 1) * np.eye(two_j + 1), atol=1e-14)

    @pytest.mark.parametrize("two_j", [0, 3, 4, -1])
    def test_unsupported_spin(self, two_j):
        with pytest.raises(UnsupportedSpinError):
            spin_matrices(two_j)

    def test_hermitian(self):
        for two_j in (1, 2):
            for mat in spin_matrices(two_j):
                assert np.allclose(mat, mat.conj().T)


class TestSpinOperators:
    def test_spectra(self):
        ops = spin_operators()
        assert np.allclose(np.sort(np.linalg.eigvalsh(ops.sz)), [-1, 0, 1])
        assert np.allclose(np.sort(np.linalg.eigvalsh(ops.iz)), [-0.5, 0.5])

    def test_lifted_operators_commute_exactly(self):
        ops = spin_operators()
        for e_op in (ops.SX, ops.SY, ops.SZ):
            for n_op in (ops.IX, ops.IY, ops.IZ):
                comm = e_op @ n_op - n_op @ e_op
                assert np.max(np.abs(comm)) == 0.0


class TestBuildHamiltonian:
    def test_matches_bruteforce_matrix_elements(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            p = HamiltonianParams(
                b=float(rng.uniform(0.0, 20.0)),
                theta=float(rng.uniform(0.0, math.pi)),
                phi=float(rng.uniform(0.0, 2.0 * math.pi)),
            )
            h = build_hamiltonian(p)
            oracle = hamiltonian_bruteforce(p)
            assert np.allclose(h, oracle, rtol=1e-12, atol=1e-12 * np.max(np.abs(oracle)))

    def test_hermitian(self):
        p = HamiltonianParams(b=7.3, theta=0.4, phi=1.1)
        h = build_hamiltonian(p)
        assert np.max(np.abs(h - h.conj().T)) <= 1e-12 * np.max(np.abs(h))

    def test_trace_is_four_d(self):
        # only Sz^2 has a trace; Zeeman and hyperfine terms are traceless
        for p in (HamiltonianParams(), HamiltonianParams(b=9.0, theta=1.0)):
            assert np.isclose(np.trace(build_hamiltonian(p)).real, 4.0 * p.d, rtol=1e-13)

    def test_ms0_zeeman_diagonal_difference(self):
        p = HamiltonianParams()  # theta = 0, B = 4 mT
        h = build_hamiltonian(p)
        diff = (h[2, 2] - h[3, 3]).real
        assert np.isclose(diff, -p.gamma_n * p.b, rtol=1e-12)
        assert np.isclose(diff, TWO_PI * 17.28e3, rtol=1e-12)

    def test_zero_field_spectrum_structure(self):
        p = HamiltonianParams(b=0.0)
        dec = linalg.eigh(build_hamiltonian(p))
        w = dec.eigenvalues
        low, high = w[:2], w[2:]
        assert np.all(np.abs(low) < TWO_PI * 10e3)          # pair near zero
        assert abs(low[1] - low[0]) < TWO_PI * 1.0          # exactly degenerate
        assert np.all(np.abs(high - p.d) < TWO_PI * 3e6)    # four levels near D
        # hyperfine splits the upper group into two doublets about A_par apart
        gap = high[2] - high[1]
        assert abs(gap - p.a_par) < TWO_PI * 20e3

    def test_spectrum_even_in_field_tilt(self):
        # reflecting the transverse field (theta -> -theta) keeps the spectrum
        p_plus = HamiltonianParams(theta=0.3)
        p_minus = HamiltonianParams(theta=0.3, phi=math.pi)
        w1 = linalg.eigh(build_hamiltonian(p_plus)).eigenvalues
        w2 = linalg.eigh(build_hamiltonian(p_minus)).eigenvalues
        assert np.allclose(w1, w2, rtol=1e-10)

    def test_commutes_with_sz_squared_at_zero_field(self):
        p = HamiltonianParams(b=0.0)
        h = build_hamiltonian(p)
        ops = spin_operators()
        sz2 = ops.SZ @ ops.SZ
        assert np.max(np.abs(h @ sz2 - sz2 @ h)) <= 1e-9 * np.max(np.abs(h))

    def test_param_validation(self):
        with pytest.raises(ValueError):
            HamiltonianParams(b=-1.0)
        with pytest.raises(ValueError):
            HamiltonianParams(theta=4.0)


class TestLabeling:
    def test_high_overlap_at_defaults(self):
        _, labels = labeled_spectrum(HamiltonianParams())
        assert all(lab.overlap > 0.99 for lab in labels)
        assert {(lab.m_s, lab.m_i) for lab in labels} == set(BASIS)

    def test_zero_field_degenerate_pair_resolved(self):
        _, labels = labeled_spectrum(HamiltonianParams(b=0.0))
        names = {(lab.m_s, lab.m_i) for lab in labels}
        assert len(names) == 6
        ms0 = [lab for lab in labels if lab.m_s == 0]
        assert {lab.m_i for lab in ms0} == {"up", "down"}

    def test_strong_mixing_raises(self):
        p = HamiltonianParams(b=100.0, theta=math.pi / 2)
        dec = linalg.eigh(build_hamiltonian(p))
        with pytest.raises(AmbiguousLabelingError):
            label_levels(dec)


class TestTransitionFrequencies:
    def test_against_block_oracle(self):
        p = HamiltonianParams()
        oracle = {k: v / TWO_PI for k, v in block_oracle_frequencies(p).items()}
        tf = transition_frequencies(p)
        assert abs(tf.f_up - abs(oracle[(-1, 0.5)] - oracle[(0, 0.5)])) < 1.0
        assert abs(tf.f_down - abs(oracle[(-1, -0.5)] - oracle[(0, -0.5)])) < 1.0
        assert abs(tf.f_r - abs(oracle[(-1, 0.5)] - oracle[(-1, -0.5)])) < 1.0
        assert abs(tf.f_larmor_ms0 - abs(oracle[(0, 0.5)] - oracle[(0, -0.5)])) < 1.0

    def test_nuclear_resonance_bracket(self):
        tf = transition_frequencies(HamiltonianParams())
        assert 3.010e6 <= tf.f_r <= 3.016e6

    def test_electron_resonances(self):
        p = HamiltonianParams()
        tf = transition_frequencies(p)
        center = (p.d - p.gamma_e * p.b) / TWO_PI
        assert abs(tf.f_up - center) < 3e6
        assert abs(tf.f_down - center) < 3e6
        split = abs(tf.f_down - tf.f_up)
        assert abs(split - p.a_par / TWO_PI) < 50e3

    def test_ms0_larmor_close_to_bare_nuclear_zeeman(self):
        p = HamiltonianParams()
        tf = transition_frequencies(p)
        bare = abs(p.gamma_n) * p.b / TWO_PI
        assert abs(tf.f_larmor_ms0 - bare) / bare < 0.02

    def test_zero_field_degenerate_ms0(self):
        tf = transition_frequencies(HamiltonianParams(b=0.0))
        assert tf.f_larmor_ms0 < 1.0
