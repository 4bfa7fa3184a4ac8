"""Closed-form effective model of the nuclear spin.

Second-order perturbation theory in the hyperfine coupling gives the nucleus
an effective magnetic field with two pieces: an electron-independent part
along a rotated z' axis, whose transverse component is enhanced by the factor
(1 + 2 gamma_e A_perp / (gamma_n D)), and an electron-conditioned part that
scales with m_S and m_S^2.  Their vector sum reproduces the effective nuclear
Larmor frequency

    omega(m_S) = |gamma_n| sqrt( Bx^2 (1 + 2k - 3 m_S^2 k)^2
                                 + (m_S A_par/gamma_n - Bz)^2 ),
    k = gamma_e A_perp / (gamma_n D)

exactly (the cross terms cancel algebraically).  The model is derived for the
field in the x-z plane and is valid for gamma_e B << D; a warning is emitted
outside that regime.  All returned frequencies and phases are magnitudes:
gamma_n < 0 flips the precession sense but not any observable used here.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrameError
from .hamiltonian import HamiltonianParams

#: Reference value of the tan^2(theta) sensitivity coefficient corresponding
#: to the single-power enhancement (1 + k)^2 at the default constants; it is
#: reported alongside the squared-enhancement coefficient computed at runtime.
QUOTED_TAN2_COEFFICIENT = 52.4

VALIDITY_RATIO = 0.1


class PerturbativeRegimeWarning(UserWarning):
    """Raised (as a warning) when gamma_e B / D exceeds the trusted ratio."""


def _check_regime(p: HamiltonianParams) -> None:
    if p.d != 0 and p.gamma_e * p.b / p.d > VALIDITY_RATIO:
        warnings.warn(
            "effective model used outside its trusted regime "
            f"(gamma_e*B/D = {p.gamma_e * p.b / p.d:.3f} > {VALIDITY_RATIO})",
            PerturbativeRegimeWarning,
            stacklevel=3,
        )


def transverse_amplification(p: HamiltonianParams) -> float:
    """Enhancement factor 1 + 2 gamma_e A_perp / (gamma_n D) (negative here)."""
    return 1.0 + 2.0 * p.gamma_e * p.a_perp / (p.gamma_n * p.d)


def tan2_coefficient(p: HamiltonianParams) -> float:
    """tan^2(theta) coefficient of the m_S=0 frequency: (1 + 2k)^2."""
    return transverse_amplification(p) ** 2


def beta_ind(p: HamiltonianParams) -> float:
    """Electron-independent effective field magnitude (mT) along z'."""
    _check_regime(p)
    amp = transverse_amplification(p)
    return math.sqrt(p.b_z**2 + (amp * p.b_x) ** 2)


def beta_ms(p: HamiltonianParams, m_s: int) -> np.ndarray:
    """Electron-conditioned effective field (mT), a 3-vector in the primed frame.

    Every component carries a factor m_S or m_S^2, so m_S=0 gives the zero
    vector; the y component vanishes for a field in the x-z plane.  Raises
    ``DegenerateFrameError`` when the frame field beta_ind vanishes.
    """
    if m_s not in (-1, 0, 1):
        raise ValueError("m_s must be -1, 0 or +1")
    _check_regime(p)
    bind = beta_ind(p)
    if bind == 0.0:
        raise DegenerateFrameError("beta_ind = 0: primed frame undefined")
    k = p.gamma_e * p.a_perp / (p.gamma_n * p.d)
    a_over_gn = p.a_par / p.gamma_n  # mT
    bx, bz = p.b_x, p.b_z
    x = bx * (m_s * (1.0 + 2.0 * k) * a_over_gn - 3.0 * m_s**2 * k * bz) / bind
    z = (-m_s * a_over_gn * bz - 3.0 * m_s**2 * k * (1.0 + 2.0 * k) * bx**2) / bind
    return np.array([x, 0.0, z])


@dataclass(frozen=True)
class EffectiveField:
    """Effective field decomposition seen by the nucleus for a given m_S."""

    beta_ind: float
    beta_ms: np.ndarray
    m_s: int

    @property
    def total(self) -> np.ndarray:
        return self.beta_ms + np.array([0.0, 0.0, self.beta_ind])


def effective_field(p: HamiltonianParams, m_s: int) -> EffectiveField:
    return EffectiveField(beta_ind=beta_ind(p), beta_ms=beta_ms(p, m_s), m_s=m_s)


def effective_larmor(p: HamiltonianParams, m_s: int) -> float:
    """Effective nuclear Larmor frequency (rad/s, nonnegative) for a given m_S."""
    if m_s not in (-1, 0, 1):
        raise ValueError("m_s must be -1, 0 or +1")
    _check_regime(p)
    k = p.gamma_e * p.a_perp / (p.gamma_n * p.d)
    xfac = 1.0 + 2.0 * k - 3.0 * m_s**2 * k
    zterm = m_s * p.a_par / p.gamma_n - p.b_z
    return abs(p.gamma_n) * math.sqrt((p.b_x * xfac) ** 2 + zterm**2)


def accumulated_phase(p: HamiltonianParams, duration: float) -> float:
    """Phase (rad) precessed by the m_S=0 nucleus over ``duration`` seconds."""
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    return effective_larmor(p, 0) * duration


@dataclass(frozen=True)
class SensitivityReport:
    """Nuclear vs electron Ramsey phase accumulation for dc sensing.

    ``gain`` is the ratio of the nuclear phase collected over half the
    nuclear dephasing time to the electron phase collected over half the
    electron dephasing time; both tan^2(theta) coefficients (computed and
    reference) are carried so the enhancement convention is explicit.
    """

    omega_nuclear: float        # rad/s
    phase_nuclear: float        # rad over t2n_star / 2
    phase_electron: float       # rad over t2_star / 2
    gain: float
    t2n_star: float             # s
    t2_star: float              # s
    tan2_coefficient: float     # (1 + 2k)^2, computed
    tan2_coefficient_quoted: float = QUOTED_TAN2_COEFFICIENT


def sensitivity_gain(p: HamiltonianParams, t2n_star: float = 9e-3,
                     t2_star: float = 1e-6) -> SensitivityReport:
    """Compare nuclear and electron accumulated Ramsey phases.

    Defaults: nuclear dephasing time 9 ms, electron dephasing time 1 us.
    """
    if t2n_star <= 0 or t2_star <= 0:
        raise ValueError("dephasing times must be positive")
    omega_n = effective_larmor(p, 0)
    phase_n = omega_n * t2n_star / 2.0
    phase_e = p.gamma_e * p.b_z * t2_star / 2.0
    if phase_e == 0.0:
        raise DegenerateFrameError("electron Ramsey phase vanishes (B_z = 0)")
    return SensitivityReport(
        omega_nuclear=omega_n,
        phase_nuclear=phase_n,
        phase_electron=phase_e,
        gain=phase_n / phase_e,
        t2n_star=t2n_star,
        t2_star=t2_star,
        tan2_coefficient=tan2_coefficient(p),
    )
