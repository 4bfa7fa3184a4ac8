"""Ground-state spin Hamiltonian of the 15N-NV center.

The joint system is the S=1 NV electron spin coupled to the I=1/2 nitrogen
nuclear spin.  In angular-frequency units (rad/s) the Hamiltonian is

    H = D Sz^2 + gamma_e B.S - gamma_n B.I + A_par Sz Iz + A_perp (Sx Ix + Sy Iy)

with the NV axis along z and the static field of magnitude B tilted by the
polar angle theta (azimuth phi, default 0 so the field lies in the x-z
plane).  All frequencies are angular internally; CLI/file boundaries convert
to Hz, mT and degrees.

Product basis order: electron m_S descending (+1, 0, -1) tensor nuclear
(up, down), i.e. indices 0..5 are
(+1,up), (+1,down), (0,up), (0,down), (-1,up), (-1,down).
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import AmbiguousLabelingError, UnsupportedSpinError
from .linalg import EigenDecomposition, eigh, kron

TWO_PI = 2.0 * math.pi

# Default physical constants for the 15N-NV ground state (angular units).
ZERO_FIELD_SPLITTING = TWO_PI * 2.87e9        # rad/s
GYROMAGNETIC_E = TWO_PI * 28.0e6              # rad/s per mT
GYROMAGNETIC_N15 = TWO_PI * (-4.32e3)         # rad/s per mT (negative for 15N)
HYPERFINE_PAR_N15 = TWO_PI * 3.03e6           # rad/s, along the NV axis
HYPERFINE_PERP_N15 = TWO_PI * 3.65e6          # rad/s, transverse

SPIN_UP = "up"
SPIN_DOWN = "down"

#: Product basis labels (m_S, m_I) in matrix order.
BASIS = (
    (+1, SPIN_UP), (+1, SPIN_DOWN),
    (0, SPIN_UP), (0, SPIN_DOWN),
    (-1, SPIN_UP), (-1, SPIN_DOWN),
)

#: Labeling below this squared overlap is considered meaningless.
OVERLAP_THRESHOLD = 0.6

#: Eigenvalue gaps below this fraction of the spectral scale count as degenerate.
DEGENERACY_RTOL = 1e-10


@dataclass(frozen=True)
class HamiltonianParams:
    """Physical constants and static-field configuration.

    Frequencies are angular (rad/s, rad/s per mT), the field magnitude is in
    mT and the angles in radians.  Defaults are the 15N-NV ground-state
    constants and a 4.0 mT field along the NV axis.
    """

    d: float = ZERO_FIELD_SPLITTING
    gamma_e: float = GYROMAGNETIC_E
    gamma_n: float = GYROMAGNETIC_N15
    a_par: float = HYPERFINE_PAR_N15
    a_perp: float = HYPERFINE_PERP_N15
    b: float = 4.0
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("field magnitude must be nonnegative")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")

    @property
    def b_x(self) -> float:
        return self.b * math.sin(self.theta) * math.cos(self.phi)

    @property
    def b_y(self) -> float:
        return self.b * math.sin(self.theta) * math.sin(self.phi)

    @property
    def b_z(self) -> float:
        return self.b * math.cos(self.theta)


def spin_matrices(two_j: int):
    """Spin operators (Jx, Jy, Jz) for 2j = ``two_j`` in the descending-m basis.

    Built from the ladder matrix elements sqrt(j(j+1) - m(m+1)).  Supports
    spin-1/2 (``two_j=1``) and spin-1 (``two_j=2``).
    """
    if two_j not in (1, 2):
        raise UnsupportedSpinError(f"unsupported 2j={two_j}; only spin-1/2 and spin-1")
    j = two_j / 2.0
    dim = two_j + 1
    m = j - np.arange(dim)
    jz = np.diag(m.astype(np.complex128))
    jplus = np.zeros((dim, dim), dtype=np.complex128)
    for k in range(1, dim):
        jplus[k - 1, k] = math.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jx = 0.5 * (jplus + jplus.conj().T)
    jy = (jplus - jplus.conj().T) / 2j
    return jx, jy, jz


@dataclass(frozen=True)
class SpinOperators:
    """Electron (S=1) and nuclear (I=1/2) spin matrices and their 6x6 lifts."""

    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    ix: np.ndarray
    iy: np.ndarray
    iz: np.ndarray
    SX: np.ndarray = field(repr=False, default=None)
    SY: np.ndarray = field(repr=False, default=None)
    SZ: np.ndarray = field(repr=False, default=None)
    IX: np.ndarray = field(repr=False, default=None)
    IY: np.ndarray = field(repr=False, default=None)
    IZ: np.ndarray = field(repr=False, default=None)


@lru_cache(maxsize=1)
def spin_operators() -> SpinOperators:
    sx, sy, sz = spin_matrices(2)
    ix, iy, iz = spin_matrices(1)
    eye_e = np.eye(3, dtype=np.complex128)
    eye_n = np.eye(2, dtype=np.complex128)
    return SpinOperators(
        sx=sx, sy=sy, sz=sz, ix=ix, iy=iy, iz=iz,
        SX=kron(sx, eye_n), SY=kron(sy, eye_n), SZ=kron(sz, eye_n),
        IX=kron(eye_e, ix), IY=kron(eye_e, iy), IZ=kron(eye_e, iz),
    )


def build_hamiltonian(p: HamiltonianParams) -> np.ndarray:
    """Assemble the 6x6 joint Hamiltonian in rad/s.

    Zero-field splitting, electron and nuclear Zeeman terms, and the axially
    symmetric hyperfine coupling; Hermitian by construction.
    """
    ops = spin_operators()
    h = p.d * (ops.SZ @ ops.SZ)
    h = h + p.gamma_e * (p.b_x * ops.SX + p.b_y * ops.SY + p.b_z * ops.SZ)
    h = h - p.gamma_n * (p.b_x * ops.IX + p.b_y * ops.IY + p.b_z * ops.IZ)
    h = h + p.a_par * (ops.SZ @ ops.IZ)
    h = h + p.a_perp * (ops.SX @ ops.IX + ops.SY @ ops.IY)
    return h


@dataclass(frozen=True)
class LevelLabel:
    """Product-basis name of an eigenstate and its squared overlap."""

    m_s: int
    m_i: str
    overlap: float


def _resolve_degenerate_clusters(dec: EigenDecomposition) -> np.ndarray:
    """Rotate eigenvectors inside degenerate clusters to diagonalize Iz.

    Degenerate subspaces come out of the eigensolver in an arbitrary basis;
    diagonalizing the lifted nuclear Iz inside each cluster makes the
    labeling deterministic.
    """
    w = dec.eigenvalues
    v = dec.eigenvectors.copy()
    scale = max(np.max(np.abs(w)), 1.0)
    tol = DEGENERACY_RTOL * scale
    iz = spin_operators().IZ
    start = 0
    n = len(w)
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[stop - 1] <= tol:
            stop += 1
        if stop - start > 1:
            block = v[:, start:stop]
            sub = block.conj().T @ iz @ block
            sub_dec = eigh(sub)
            v[:, start:stop] = block @ sub_dec.eigenvectors
        start = stop
    return v


def label_levels(dec: EigenDecomposition, threshold: float = OVERLAP_THRESHOLD):
    """Assign each eigenvector the product basis state of maximal overlap.

    Works for fields weak enough that eigenstates keep product-state
    character; raises ``AmbiguousLabelingError`` when any best overlap falls
    below ``threshold`` or two eigenvectors claim the same basis state.
    Degenerate clusters are first rotated to diagonalize the nuclear Iz.
    """
    v = _resolve_degenerate_clusters(dec)
    weights = np.abs(v) ** 2
    labels = []
    claimed = set()
    for k in range(v.shape[1]):
        idx = int(np.argmax(weights[:, k]))
        overlap = float(weights[idx, k])
        if overlap < threshold:
            raise AmbiguousLabelingError(
                f"eigenvector {k} has max product-state overlap {overlap:.3f} "
                f"< {threshold}"
            )
        if idx in claimed:
            raise AmbiguousLabelingError(
                f"two eigenvectors both map onto basis state {BASIS[idx]}"
            )
        claimed.add(idx)
        m_s, m_i = BASIS[idx]
        labels.append(LevelLabel(m_s=m_s, m_i=m_i, overlap=overlap))
    return labels


def labeled_spectrum(p: HamiltonianParams):
    """Eigendecomposition of the Hamiltonian plus product-state labels."""
    dec = eigh(build_hamiltonian(p))
    return dec, label_levels(dec)


@dataclass(frozen=True)
class TransitionFrequencies:
    """Transition frequencies in Hz extracted from the exact spectrum.

    ``f_up``/``f_down`` are the electron 0 <-> -1 resonances for nuclear
    up/down, ``f_r`` the nuclear resonance inside the m_S=-1 manifold and
    ``f_larmor_ms0`` the nuclear splitting of the m_S=0 manifold.  All are
    magnitudes; precession sense (gamma_n < 0) is not encoded.
    """

    f_up: float
    f_down: float
    f_r: float
    f_larmor_ms0: float

    @property
    def f_mw_center(self) -> float:
        return 0.5 * (self.f_up + self.f_down)


def transition_frequencies(p: HamiltonianParams) -> TransitionFrequencies:
    dec, labels = labeled_spectrum(p)
    energy = {(lab.m_s, lab.m_i): dec.eigenvalues[k] for k, lab in enumerate(labels)}
    if len(energy) != 6:
        raise AmbiguousLabelingError("labeling did not produce six distinct levels")

    def f(a, b):
        return abs(energy[a] - energy[b]) / TWO_PI

    return TransitionFrequencies(
        f_up=f((-1, SPIN_UP), (0, SPIN_UP)),
        f_down=f((-1, SPIN_DOWN), (0, SPIN_DOWN)),
        f_r=f((-1, SPIN_UP), (-1, SPIN_DOWN)),
        f_larmor_ms0=f((0, SPIN_UP), (0, SPIN_DOWN)),
    )
