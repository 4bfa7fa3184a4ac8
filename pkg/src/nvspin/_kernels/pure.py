"""Pure-Python (numpy) implementation of the hot numerical kernels.

Mirror of the compiled extension in ``_core.pyx``; the package selects one of
the two at import time (see ``nvspin._kernels``).  Both backends implement the
same cyclic Jacobi diagonalization with identical pivot order and rotation
formulas, so results agree to rounding.
"""

import math

import numpy as np

BACKEND = "python"


def jacobi_eigh(h, max_sweeps=100, tol=1e-14):
    """Diagonalize a Hermitian matrix by cyclic complex Jacobi rotations.

    Each rotation annihilates one off-diagonal pair (p, q) with a phased
    Givens rotation; sweeps repeat until the off-diagonal Frobenius norm
    drops below ``tol`` times the Frobenius norm of the input.

    Returns ``(w, v, converged)`` with eigenvalues ``w`` ascending and
    eigenvector columns in ``v``.
    """
    a = np.array(h, dtype=np.complex128, order="C")
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v, True

    threshold = tol * scale
    skip = 1e-16 * scale  # pivots below this cannot move the spectrum
    off_mask = ~np.eye(n, dtype=bool)
    converged = False
    for _ in range(max_sweeps):
        if np.linalg.norm(a[off_mask]) <= threshold:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                m = abs(apq)
                if m <= skip:
                    continue
                tau = (a[q, q].real - a[p, p].real) / (2.0 * m)
                root = math.hypot(1.0, tau)
                t = -1.0 / (tau + root) if tau >= 0.0 else 1.0 / (root - tau)
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ph = apq / m  # e^{i arg(apq)}
                phc = ph.conjugate()

                # A <- A J  (columns p, q)
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p + s * phc * col_q
                a[:, q] = -s * col_p + c * phc * col_q
                # A <- J^H A  (rows p, q)
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p + s * ph * row_q
                a[q, :] = -s * row_p + c * ph * row_q
                # V <- V J
                col_p = v[:, p].copy()
                col_q = v[:, q].copy()
                v[:, p] = c * col_p + s * phc * col_q
                v[:, q] = -s * col_p + c * phc * col_q
    else:
        converged = np.linalg.norm(a[off_mask]) <= threshold

    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order], converged


def expm_factored(w, v, t):
    """exp(-i H t) from an eigendecomposition H = V diag(w) V^H."""
    phases = np.exp(-1j * np.asarray(w) * t)
    return (v * phases) @ v.conj().T


def propagate_drive_lab(h0, g, amp, omega, phi, duration, nsteps,
                        max_sweeps=100, tol=1e-14):
    """Total propagator for H(t) = h0 + amp*cos(omega*t + phi)*g.

    Piecewise-constant midpoint rule: each substep exponentiates the
    Hamiltonian frozen at the interval midpoint.  Second order in the
    substep; the drive is sampled ``nsteps`` times over ``duration``.
    """
    n = h0.shape[0]
    u = np.eye(n, dtype=np.complex128)
    if nsteps <= 0 or duration == 0.0:
        return u
    dt = duration / nsteps
    for k in range(nsteps):
        t_mid = (k + 0.5) * dt
        hk = h0 + (amp * math.cos(omega * t_mid + phi)) * g
        w, v, ok = jacobi_eigh(hk, max_sweeps=max_sweeps, tol=tol)
        if not ok:
            raise RuntimeError("eigensolver failed to converge inside drive propagation")
        u = expm_factored(w, v, dt) @ u
    return u
