# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot numerical kernels.

Same algorithms as ``pure.py`` (cyclic complex Jacobi diagonalization and the
piecewise-constant lab-frame drive propagator), hand-lowered to C loops for
the 6x6 matrices that dominate the toolkit's runtime.
"""

import numpy as np

from libc.math cimport cos, sin, sqrt, hypot

BACKEND = "cython"


cdef double _cabs(double complex z) noexcept:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef double _off_norm(double complex[:, ::1] a, int n) noexcept:
    cdef int i, j
    cdef double acc = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += a[i, j].real * a[i, j].real + a[i, j].imag * a[i, j].imag
    return sqrt(acc)


cdef bint _jacobi_core(double complex[:, ::1] a, double complex[:, ::1] v,
                       int n, int max_sweeps, double tol) noexcept:
    """Cyclic Jacobi on a Hermitian matrix; a is overwritten, v accumulates."""
    cdef int sweep, p, q, i
    cdef double scale = 0.0, threshold, skip, m, tau, root, t, c, s
    cdef double complex apq, ph, phc, xp, xq

    for p in range(n):
        for q in range(n):
            scale += a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag
    scale = sqrt(scale)
    if scale == 0.0:
        return True
    threshold = tol * scale
    skip = 1e-16 * scale

    for sweep in range(max_sweeps):
        if _off_norm(a, n) <= threshold:
            return True
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                m = _cabs(apq)
                if m <= skip:
                    continue
                tau = (a[q, q].real - a[p, p].real) / (2.0 * m)
                root = hypot(1.0, tau)
                if tau >= 0.0:
                    t = -1.0 / (tau + root)
                else:
                    t = 1.0 / (root - tau)
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                ph = apq / m
                phc = ph.conjugate()

                for i in range(n):          # A <- A J
                    xp = a[i, p]
                    xq = a[i, q]
                    a[i, p] = c * xp + s * phc * xq
                    a[i, q] = -s * xp + c * phc * xq
                for i in range(n):          # A <- J^H A
                    xp = a[p, i]
                    xq = a[q, i]
                    a[p, i] = c * xp + s * ph * xq
                    a[q, i] = -s * xp + c * ph * xq
                for i in range(n):          # V <- V J
                    xp = v[i, p]
                    xq = v[i, q]
                    v[i, p] = c * xp + s * phc * xq
                    v[i, q] = -s * xp + c * phc * xq
    return _off_norm(a, n) <= threshold


def jacobi_eigh(h, int max_sweeps=100, double tol=1e-14):
    """Diagonalize a Hermitian matrix; returns (w ascending, V, converged)."""
    a_arr = np.array(h, dtype=np.complex128, order="C")
    cdef int n = a_arr.shape[0]
    v_arr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] a = a_arr
    cdef double complex[:, ::1] v = v_arr
    cdef bint ok = _jacobi_core(a, v, n, max_sweeps, tol)
    w = np.diag(a_arr).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v_arr[:, order], bool(ok)


def expm_factored(w, v, double t):
    """exp(-i H t) from an eigendecomposition H = V diag(w) V^H."""
    phases = np.exp(-1j * np.asarray(w) * t)
    return (v * phases) @ v.conj().T


def propagate_drive_lab(h0, g, double amp, double omega, double phi,
                        double duration, int nsteps,
                        int max_sweeps=100, double tol=1e-14):
    """Total propagator for H(t) = h0 + amp*cos(omega*t + phi)*g.

    Piecewise-constant midpoint rule, identical to the pure backend.
    """
    h0_arr = np.ascontiguousarray(h0, dtype=np.complex128)
    g_arr = np.ascontiguousarray(g, dtype=np.complex128)
    cdef int n = h0_arr.shape[0]
    u_arr = np.eye(n, dtype=np.complex128)
    if nsteps <= 0 or duration == 0.0:
        return u_arr

    hk_arr = np.empty((n, n), dtype=np.complex128)
    v_arr = np.empty((n, n), dtype=np.complex128)
    ustep_arr = np.empty((n, n), dtype=np.complex128)
    unew_arr = np.empty((n, n), dtype=np.complex128)

    cdef double complex[:, ::1] h0v = h0_arr
    cdef double complex[:, ::1] gv = g_arr
    cdef double complex[:, ::1] hk = hk_arr
    cdef double complex[:, ::1] v = v_arr
    cdef double complex[:, ::1] u = u_arr
    cdef double complex[:, ::1] ustep = ustep_arr
    cdef double complex[:, ::1] unew = unew_arr

    cdef double dt = duration / nsteps
    cdef double t_mid, drive, wk, ang
    cdef int k, i, j, l
    cdef double complex acc, phase_l
    cdef bint ok

    for k in range(nsteps):
        t_mid = (k + 0.5) * dt
        drive = amp * cos(omega * t_mid + phi)
        for i in range(n):
            for j in range(n):
                hk[i, j] = h0v[i, j] + drive * gv[i, j]
                v[i, j] = 1.0 if i == j else 0.0
        ok = _jacobi_core(hk, v, n, max_sweeps, tol)
        if not ok:
            raise RuntimeError("eigensolver failed to converge inside drive propagation")
        # ustep = V exp(-i diag(hk) dt) V^H
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    ang = -hk[l, l].real * dt
                    phase_l = cos(ang) + 1j * sin(ang)
                    acc += v[i, l] * phase_l * v[j, l].conjugate()
                ustep[i, j] = acc
        # u = ustep @ u
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc += ustep[i, l] * u[l, j]
                unew[i, j] = acc
        for i in range(n):
            for j in range(n):
                u[i, j] = unew[i, j]
    return u_arr
