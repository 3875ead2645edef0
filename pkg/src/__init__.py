"""
nmlab
Quantifying quantum non-Markovianity as a resource: the RHP witness, the
free-cone distance rate D_T, robustness and the normalized measure, for
time-dependent GKSL generators.

Modules are imported flat (src/ on the path), e.g. ``from measures import rhp_g``.

Version: 1.0.0
License: MIT
"""

__version__ = "1.0.0"
