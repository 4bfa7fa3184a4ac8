"""nvspin: spin dynamics of 15N nuclei in diamond NV centers.

Exact ground-state Hamiltonian construction and diagonalization, a
closed-form effective-Larmor model, a density-matrix pulse-sequence engine,
damped-oscillation curve fitting, and a CLI that reproduces the angle
dependence of the nuclear Larmor frequency and the dc-sensitivity comparison.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
