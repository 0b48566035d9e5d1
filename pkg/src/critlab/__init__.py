"""critlab: exact oracles and Monte Carlo engines for 2D lattice models.

Percolation, Ising / random currents, FK-Potts, six-vertex transfer
matrices, the OSSS revealment inequality, lattice phi^4 and loop homotopy
classes, each sampler paired with a small-instance exact check.
"""

import math

__version__ = "0.1.0"

# Onsager's critical inverse temperature of the square-lattice Ising model.
BETA_C_2D = math.log(math.sqrt(1.0 + math.sqrt(2.0)))
