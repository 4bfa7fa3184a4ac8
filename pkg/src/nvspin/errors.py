"""Exception hierarchy shared by all nvspin modules."""


class NvspinError(Exception):
    """Base class for all toolkit errors."""


class InputError(NvspinError):
    """Malformed user input (config files, CLI arguments, data files)."""


class NotHermitianError(NvspinError):
    """Matrix handed to a Hermitian-only routine is not Hermitian."""


class NoConvergenceError(NvspinError):
    """Iterative eigensolver exhausted its sweep budget."""


class UnsupportedSpinError(NvspinError):
    """Spin quantum number outside the supported set."""


class AmbiguousLabelingError(NvspinError):
    """Eigenstates too strongly mixed to be named by product basis states."""


class DegenerateFrameError(NvspinError):
    """Effective-field frame undefined because the frame field vanishes."""


class StepResolutionError(NvspinError):
    """Lab-frame integrator asked to run with too few steps per drive period."""


class MalformedSequenceError(NvspinError):
    """Pulse sequence violates the required structure."""


class TooFewSamplesError(NvspinError):
    """Trace has too few samples for spectral estimation or fitting."""


class DegenerateTraceError(NvspinError):
    """Trace carries no signal variance; nothing to fit."""
