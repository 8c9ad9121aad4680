"""Single photons and single atoms coupled through a nanofiber guided mode.

Modules, from the bottom up:

* :mod:`specfun` Bessel functions with derivatives and the complex error function
* :mod:`fiber_modes` HE11 propagation constant, group delay and field profile
* :mod:`radiation` decay rate into the radiation modes of the fiber
* :mod:`coupling` chiral coupling coefficients and the rate bundle
* :mod:`pulses` probe envelopes and photon statistics
* :mod:`dynamics` atomic excitation (ODE, closed forms, quadrature, Fock ladder, coherent)
* :mod:`fluxes` transmitted, reflected and radiated fluxes and probabilities
* :mod:`config`, :mod:`cli` scenario files and the command-line runner
"""

__version__ = "0.1.0"

from .coupling import AtomSpec, Channel, RateBundle, rate_bundle  # noqa: E402
from .dynamics import DynamicsResult, solve  # noqa: E402
from .fiber_modes import FiberSpec, ModeSolution, solve_he11  # noqa: E402
from .fluxes import FluxResult, flux  # noqa: E402
from .pulses import Coherent, Fock, PulseSpec, Shape  # noqa: E402

__all__ = [
    "AtomSpec", "Channel", "Coherent", "DynamicsResult", "FiberSpec", "FluxResult", "Fock",
    "ModeSolution", "PulseSpec", "RateBundle", "Shape", "flux", "rate_bundle", "solve",
    "solve_he11",
]
