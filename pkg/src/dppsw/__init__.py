"""Noncolliding Brownian motion with drift as a determinantal process.

Submodules
----------
numerics    signed log-domain numbers, quadrature rules, small determinants
qseries     q-Pochhammer symbols, q-binomials, q-derivative
swpoly      biorthogonal Stieltjes-Wigert polynomials and their constants
kernel      correlation kernels, densities, gap probabilities
process     exact transition and multitime densities, partition function
montecarlo  path samplers used as an independent check of the kernel
figures     density profiles, widths and figure presets
validate    the invariant suite
cli         command-line entry point
"""

from __future__ import annotations

__version__ = "1.0.0"

from .kernel import ModelParams, density, make_kernel  # noqa: E402
from .numerics import SignedLog  # noqa: E402

__all__ = ["__version__", "ModelParams", "make_kernel", "density", "SignedLog"]
