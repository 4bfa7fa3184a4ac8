"""Density-matrix pulse-sequence engine.

Simulates the nuclear Rabi/Larmor protocol on the full 6x6 electron-nuclear
state: laser initialization of the electron, a Ramsey block of two microwave
pi/2 pulses bracketing a free precession that separates the two nuclear
species into different electron manifolds, a radio-frequency pulse that
drives the nuclear spin inside the m_S=-1 manifold (while m_S=0 nuclei
precess freely about their tilted effective field), a second laser pulse and
Ramsey block that map the nuclear state back onto electron populations, and a
photoluminescence readout proportional to the m_S=0 population.

Drive segments propagate either in a rotating-wave approximation (one static
6x6 exponential per segment) or in the lab frame with the full
time-dependent Hamiltonian (piecewise-constant substeps); the two modes act
as mutual oracles.  Drive phases are referenced to a global sequence clock,
which models phase-coherent sources and makes the frame-hopping propagation
exactly equivalent to a continuously rotating frame.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import _kernels, linalg
from .errors import (
    InputError,
    MalformedSequenceError,
    StepResolutionError,
)
from .hamiltonian import (
    BASIS,
    HamiltonianParams,
    build_hamiltonian,
    spin_operators,
    transition_frequencies,
)

TWO_PI = 2.0 * math.pi

STATE_ATOL = 1e-9


class Frame(Enum):
    RWA = "rwa"
    LAB = "lab"


class SegmentKind(Enum):
    LASER_INIT = "laser_init"
    MW_PULSE = "mw_pulse"
    FREE_EVOLVE = "free_evolve"
    RF_PULSE = "rf_pulse"
    READOUT = "readout"


@dataclass(frozen=True)
class PulseSegment:
    """One typed step of a pulse sequence.

    ``phase`` selects the drive axis in the rotating frame (0 -> x rotation,
    pi/2 -> y rotation); ``frame`` selects RWA or lab-frame propagation for
    drive segments and is ignored elsewhere.
    """

    kind: SegmentKind
    duration: float = 0.0
    frequency: float = 0.0      # Hz, drive segments only
    rabi_rate: float = 0.0      # rad/s rotation rate on the addressed transition
    phase: float = 0.0          # rad
    frame: Frame = Frame.RWA

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("segment duration must be nonnegative")
        if self.rabi_rate < 0:
            raise ValueError("rabi_rate must be nonnegative")
        if self.kind in (SegmentKind.MW_PULSE, SegmentKind.RF_PULSE) and self.frequency <= 0:
            raise ValueError("drive segments need a positive frequency")

    @staticmethod
    def laser() -> "PulseSegment":
        return PulseSegment(kind=SegmentKind.LASER_INIT)

    @staticmethod
    def mw(frequency, duration, rabi_rate, phase=0.0, frame=Frame.RWA) -> "PulseSegment":
        return PulseSegment(SegmentKind.MW_PULSE, duration, frequency, rabi_rate, phase, frame)

    @staticmethod
    def rf(frequency, duration, rabi_rate, phase=0.0, frame=Frame.RWA) -> "PulseSegment":
        return PulseSegment(SegmentKind.RF_PULSE, duration, frequency, rabi_rate, phase, frame)

    @staticmethod
    def free(duration) -> "PulseSegment":
        return PulseSegment(SegmentKind.FREE_EVOLVE, duration)

    @staticmethod
    def readout() -> "PulseSegment":
        return PulseSegment(kind=SegmentKind.READOUT)


@dataclass
class DensityState:
    """Joint electron-nuclear density matrix in the product basis."""

    rho: np.ndarray
    basis: tuple = BASIS

    def validate(self, atol: float = STATE_ATOL) -> None:
        r = self.rho
        if r.shape != (6, 6):
            raise ValueError(f"density matrix must be 6x6, got {r.shape}")
        if np.max(np.abs(r - r.conj().T)) > atol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(r).real - 1.0) > atol or abs(np.trace(r).imag) > atol:
            raise ValueError("density matrix trace is not 1")
        w = linalg.eigh(0.5 * (r + r.conj().T)).eigenvalues
        if w.min() < -atol:
            raise ValueError(f"density matrix not positive semidefinite (min eig {w.min():.2e})")

    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)

    def population_ms(self, m_s: int) -> float:
        idx = [k for k, (m, _) in enumerate(self.basis) if m == m_s]
        return float(sum(self.rho[k, k].real for k in idx))

    def electron_reduced(self) -> np.ndarray:
        r = self.rho.reshape(3, 2, 3, 2)
        return np.einsum("ikjk->ij", r)

    def nuclear_reduced(self) -> np.ndarray:
        r = self.rho.reshape(3, 2, 3, 2)
        return np.einsum("kikj->ij", r)

    def nuclear_bloch(self) -> np.ndarray:
        ops = spin_operators()
        rn = self.nuclear_reduced()
        return np.array([
            np.trace(rn @ ops.ix).real,
            np.trace(rn @ ops.iy).real,
            np.trace(rn @ ops.iz).real,
        ])


def thermal_state() -> DensityState:
    """Maximally mixed joint state (room-temperature spin bath)."""
    return DensityState(rho=np.eye(6, dtype=np.complex128) / 6.0)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    dec = linalg.eigh(0.5 * (m + m.conj().T))
    w = np.clip(dec.eigenvalues, 0.0, None)
    v = dec.eigenvectors
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(a, b) -> float:
    """Uhlmann fidelity of two density matrices (or DensityState objects)."""
    ra = a.rho if isinstance(a, DensityState) else np.asarray(a)
    rb = b.rho if isinstance(b, DensityState) else np.asarray(b)
    sa = _psd_sqrt(ra)
    inner = sa @ rb @ sa
    w = np.clip(linalg.eigh(0.5 * (inner + inner.conj().T)).eigenvalues, 0.0, None)
    return float(np.sum(np.sqrt(w)) ** 2)


@dataclass(frozen=True)
class SequenceResult:
    """Outcome of one sequence run: PL-proxy signal plus the final state."""

    signal: float
    final_state: DensityState
    per_segment_states: list | None = None


@dataclass(frozen=True)
class TraceSeries:
    """Signal versus RF pulse duration, with the provenance needed to rerun it."""

    durations: np.ndarray
    signals: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.durations, dtype=float)
        if d.size > 1 and not np.all(np.diff(d) > 0):
            raise ValueError("durations must be strictly increasing")


@dataclass(frozen=True)
class EngineConfig:
    """Sequence-level knobs; defaults follow the reference experiment."""

    mw_pi2: float = 10e-9               # s, microwave pi/2 pulse length
    rf_rabi: float = TWO_PI * 4.30e3    # rad/s nuclear Rabi rate
    mw_frequency: float | None = None   # Hz; default midway between f_up, f_down
    rf_frequency: float | None = None   # Hz; default exact nuclear resonance
    ramsey_free: float | None = None    # s; default 1/(2 |f_up - f_down|)
    ramsey_axis2: float = math.pi / 2   # second pi/2 axis (pi/2 -> y)
    contrast_min: float = 0.7           # PL signal at zero m_S=0 population
    contrast_max: float = 1.0           # PL signal at full m_S=0 population
    frame: Frame = Frame.RWA
    lab_steps_per_period: int = 100
    min_steps_per_period: int = 20
    readouts: int = 4                   # repetitions averaged by the noise model
    noise_sigma: float = 0.0            # Gaussian sigma per single readout
    seed: int = 1
    coherence_decay: float = 0.0        # 1/s damping of off-diagonals per segment
    laser_depolarization: float = 0.0   # residual electron mixedness after init
    duration_max: float = 600e-6        # s, default trace extent
    stride: int = 3                     # RF periods between trace samples
    oversample: int = 0                 # >0: samples per RF period instead


# Basis indices of the electron manifolds (see hamiltonian.BASIS).
_MS_INDEX = {+1: (0, 1), 0: (2, 3), -1: (4, 5)}


class SequenceEngine:
    """Immutable simulator bound to one parameter set and configuration.

    Each run owns its density matrix, so independent runs may execute
    concurrently.  Noise streams are derived per trace from (seed, index).
    """

    def __init__(self, params: HamiltonianParams, config: EngineConfig = EngineConfig()):
        self.params = params
        self.config = config
        self.h = build_hamiltonian(params)
        self._h_dec = linalg.eigh(self.h)
        self.transitions = transition_frequencies(params)
        self.f_mw = config.mw_frequency if config.mw_frequency else self.transitions.f_mw_center
        self.f_rf = config.rf_frequency if config.rf_frequency else self.transitions.f_r
        if config.ramsey_free is not None:
            self.ramsey_free = config.ramsey_free
        else:
            split = abs(self.transitions.f_up - self.transitions.f_down)
            # None marks a degenerate splitting; only Ramsey blocks need it
            self.ramsey_free = 1.0 / (2.0 * split) if split > 0.0 else None
        self.mw_pi2_rate = (math.pi / 2.0) / config.mw_pi2

    # -- channels ----------------------------------------------------------

    def laser_init(self, state: DensityState) -> DensityState:
        """Reset the electron to m_S=0, preserving the nuclear state.

        Models optical pumping as an instantaneous channel
        rho -> |0><0| (x) Tr_e rho, with an optional residual electron
        depolarization knob.
        """
        rho_n = state.nuclear_reduced()
        rho = np.zeros((6, 6), dtype=np.complex128)
        dep = self.config.laser_depolarization
        weights = {0: 1.0 - dep + dep / 3.0, +1: dep / 3.0, -1: dep / 3.0}
        for m_s, w in weights.items():
            if w == 0.0:
                continue
            i0, i1 = _MS_INDEX[m_s]
            rho[i0:i1 + 1, i0:i1 + 1] += w * rho_n
        return DensityState(rho=rho)

    def evolve_free(self, state: DensityState, t: float) -> DensityState:
        """Unitary evolution under the static Hamiltonian for ``t`` seconds.

        Lab-frame evolution; with globally clocked drive phases this is
        exactly the free precession of the rotating-frame picture.
        """
        u = linalg.expm_from_decomposition(self._h_dec, t)
        return DensityState(rho=u @ state.rho @ u.conj().T)

    # -- drives ------------------------------------------------------------

    def _drive_geometry(self, seg: PulseSegment):
        """Addressed transition pairs, lab generator, and frame projector."""
        hdiag = np.diag(self.h).real
        if seg.kind == SegmentKind.MW_PULSE:
            raw_pairs = [(4, 2), (5, 3)]       # (-1,mI) <-> (0,mI)
            lab_pairs = raw_pairs
        elif seg.kind == SegmentKind.RF_PULSE:
            raw_pairs = [(4, 5)]               # (-1,up) <-> (-1,down)
            lab_pairs = [(0, 1), (2, 3), (4, 5)]   # field drives I_x in every manifold
        else:
            raise ValueError(f"not a drive segment: {seg.kind}")
        pairs = [(i, j) if hdiag[i] >= hdiag[j] else (j, i) for i, j in raw_pairs]
        g_lab = np.zeros((6, 6), dtype=np.complex128)
        for i, j in lab_pairs:
            g_lab[i, j] = 1.0
            g_lab[j, i] = 1.0
        upper = frozenset(u for u, _ in pairs)
        return pairs, g_lab, upper

    def _rwa_hamiltonian(self, seg: PulseSegment, phi_eff: float):
        """Static rotating-frame Hamiltonian for one drive segment.

        The frame rotates the upper level(s) of the addressed transition at
        the drive frequency.  Static couplings between the rotated and
        unrotated subspaces oscillate in this frame and are dropped; keeping
        one as a static term would fabricate resonant pathways through shared
        spectator levels.  Each dropped far-detuned coupling leaves behind its
        second-order level shift as a diagonal compensation, so transition
        frequencies inside the frame stay aligned with the exact spectrum
        even over drives lasting many dephasing-free milliseconds.  The drive
        enters as the co-rotating term on the addressed pairs only.
        """
        pairs, _, upper = self._drive_geometry(seg)
        omega = TWO_PI * seg.frequency
        h = self.h.copy()
        diag0 = np.diag(h).real.copy()
        for i in upper:
            for j in range(6):
                if j == i or j in upper:
                    continue
                g = h[i, j]
                if g == 0.0:
                    continue
                d_lab = diag0[i] - diag0[j]
                if abs(d_lab) > 10.0 * abs(g):
                    shift = abs(g) ** 2 / d_lab
                    h[i, i] += shift
                    h[j, j] -= shift
                h[i, j] = 0.0
                h[j, i] = 0.0
        for u in upper:
            h[u, u] -= omega
        half = 0.5 * seg.rabi_rate
        drive = half * complex(math.cos(phi_eff), -math.sin(phi_eff))
        for u, low in pairs:
            h[u, low] += drive
            h[low, u] += drive.conjugate()
        p_diag = np.array([1.0 if k in upper else 0.0 for k in range(6)])
        return h, p_diag

    def drive_propagator(self, seg: PulseSegment, t_start: float = 0.0) -> np.ndarray:
        """Total lab-frame propagator of a drive segment starting at ``t_start``.

        The effective phase ``seg.phase + omega * t_start`` keeps every drive
        phase-referenced to the sequence clock (a phase-coherent source).
        """
        omega = TWO_PI * seg.frequency
        phi_eff = seg.phase + omega * t_start
        if seg.frame is Frame.RWA:
            h_rwa, p_diag = self._rwa_hamiltonian(seg, phi_eff)
            u_rot = linalg.expm_hermitian_generator(h_rwa, seg.duration)
            back = np.exp(-1j * omega * seg.duration * p_diag)
            return back[:, None] * u_rot
        cfg = self.config
        if cfg.lab_steps_per_period < cfg.min_steps_per_period:
            raise StepResolutionError(
                f"lab-frame integration needs >= {cfg.min_steps_per_period} "
                f"steps per drive period, got {cfg.lab_steps_per_period}"
            )
        _, g_lab, _ = self._drive_geometry(seg)
        nsteps = max(1, math.ceil(seg.duration * seg.frequency * cfg.lab_steps_per_period))
        return np.asarray(_kernels.propagate_drive_lab(
            self.h, g_lab, seg.rabi_rate, omega, phi_eff, seg.duration, nsteps,
        ))

    def apply_drive(self, state: DensityState, seg: PulseSegment,
                    t_start: float = 0.0) -> DensityState:
        u = self.drive_propagator(seg, t_start)
        return DensityState(rho=u @ state.rho @ u.conj().T)

    # -- composite blocks ----------------------------------------------------

    def mw_pi2_segment(self, phase: float) -> PulseSegment:
        return PulseSegment.mw(self.f_mw, self.config.mw_pi2, self.mw_pi2_rate,
                               phase=phase, frame=self.config.frame)

    def ramsey_segments(self, axis2: float | None = None) -> list:
        """pi/2 about x, free precession of +-pi/2, pi/2 about the second axis."""
        if self.ramsey_free is None:
            raise InputError(
                "degenerate hyperfine splitting: set ramsey_free explicitly"
            )
        axis2 = self.config.ramsey_axis2 if axis2 is None else axis2
        return [
            self.mw_pi2_segment(0.0),
            PulseSegment.free(self.ramsey_free),
            self.mw_pi2_segment(axis2),
        ]

    def ramsey_block(self, state: DensityState, t_start: float = 0.0,
                     axis2: float | None = None):
        """Apply the Ramsey block; returns (state, elapsed_time).

        Off resonance by +-|f_up - f_down|/2, the two nuclear species
        precess by opposite quarter turns between the pulses, so the block
        maps them onto different electron manifolds.
        """
        t = t_start
        for seg in self.ramsey_segments(axis2):
            state = self._apply_segment(state, seg, t)
            t += seg.duration
        return state, t - t_start

    def _apply_segment(self, state: DensityState, seg: PulseSegment,
                       t_start: float) -> DensityState:
        if seg.kind == SegmentKind.LASER_INIT:
            out = self.laser_init(state)
        elif seg.kind == SegmentKind.FREE_EVOLVE:
            out = self.evolve_free(state, seg.duration)
        elif seg.kind in (SegmentKind.MW_PULSE, SegmentKind.RF_PULSE):
            out = self.apply_drive(state, seg, t_start)
        elif seg.kind == SegmentKind.READOUT:
            out = state
        else:
            raise MalformedSequenceError(f"unknown segment kind {seg.kind}")
        gamma = self.config.coherence_decay
        if gamma > 0.0 and seg.duration > 0.0:
            damp = math.exp(-gamma * seg.duration)
            rho = out.rho.copy()
            off = ~np.eye(6, dtype=bool)
            rho[off] *= damp
            out = DensityState(rho=rho)
        return out

    # -- sequences -----------------------------------------------------------

    def run_sequence(self, segments, initial: DensityState | None = None,
                     record: bool = False) -> SequenceResult:
        """Thread a state through the segments and read out the PL proxy.

        The sequence must start with a laser initialization and end with a
        readout; the signal is the affine map of the final m_S=0 population
        onto the configured contrast range.
        """
        segments = list(segments)
        if not segments or segments[0].kind is not SegmentKind.LASER_INIT:
            raise MalformedSequenceError("sequence must start with a laser initialization")
        if segments[-1].kind is not SegmentKind.READOUT:
            raise MalformedSequenceError("sequence must end with a readout")
        state = initial if initial is not None else thermal_state()
        states = []
        t = 0.0
        for seg in segments:
            state = self._apply_segment(state, seg, t)
            t += seg.duration
            if record:
                states.append(state)
        a, b = self.config.contrast_min, self.config.contrast_max
        signal = a + (b - a) * state.population_ms(0)
        signal = min(max(signal, 0.0), 1.0)
        return SequenceResult(signal=signal, final_state=state,
                              per_segment_states=states if record else None)

    def rabi_larmor_sequence(self, rf_duration: float) -> list:
        """Full protocol: init, Ramsey, RF drive, re-init, Ramsey, readout."""
        segs = [PulseSegment.laser()]
        segs += self.ramsey_segments()
        if rf_duration > 0.0:
            segs.append(PulseSegment.rf(self.f_rf, rf_duration, self.config.rf_rabi,
                                        frame=self.config.frame))
        segs.append(PulseSegment.laser())
        segs += self.ramsey_segments()
        segs.append(PulseSegment.readout())
        return segs

    def stroboscopic_durations(self) -> np.ndarray:
        """Default RF duration grid: integer multiples of the RF period.

        Sampling at exact multiples of 1/f_rf makes the fast m_S=-1 nuclear
        precession invisible; ``oversample`` > 0 switches to a dense grid of
        that many samples per period instead.
        """
        cfg = self.config
        period = 1.0 / self.f_rf
        if cfg.oversample > 0:
            step = period / cfg.oversample
        else:
            step = period * cfg.stride
        n = int(math.floor(cfg.duration_max / step)) + 1
        return step * np.arange(n)

    def simulate_rabi_larmor(self, durations=None, trace_index: int = 0) -> TraceSeries:
        """One signal sample per RF duration; optional seeded Gaussian noise."""
        if durations is None:
            durations = self.stroboscopic_durations()
        durations = np.asarray(durations, dtype=float)
        signals = np.array([
            self.run_sequence(self.rabi_larmor_sequence(t)).signal for t in durations
        ])
        cfg = self.config
        if cfg.noise_sigma > 0.0 and durations.size:
            rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, trace_index)))
            signals = signals + rng.normal(
                0.0, cfg.noise_sigma / math.sqrt(cfg.readouts), size=signals.shape
            )
        meta = {
            "theta_rad": self.params.theta,
            "b_mt": self.params.b,
            "rf_rabi_rad_s": cfg.rf_rabi,
            "rf_frequency_hz": self.f_rf,
            "seed": cfg.seed,
            "trace_index": trace_index,
            "noise_sigma": cfg.noise_sigma,
        }
        return TraceSeries(durations=durations, signals=signals, meta=meta)

    def simulate_odmr(self, freq_grid, mw_pulse: PulseSegment | None = None):
        """Pulsed resonance spectrum: init, probe pulse at each frequency, read.

        The default probe is a 1 us pi pulse; dips appear at the two
        electron resonances split by the hyperfine coupling.
        """
        if mw_pulse is None:
            rate = TWO_PI * 0.5e6
            mw_pulse = PulseSegment.mw(self.f_mw, math.pi / rate, rate,
                                       frame=self.config.frame)
        freqs = np.asarray(freq_grid, dtype=float)
        signals = np.empty_like(freqs)
        for k, f in enumerate(freqs):
            probe = replace(mw_pulse, frequency=float(f))
            seq = [PulseSegment.laser(), probe, PulseSegment.readout()]
            signals[k] = self.run_sequence(seq).signal
        return freqs, signals
