"""Average hierarchical age of incorrect information (AoII) toolkit.

Analytic engine and Monte Carlo simulator for status-update systems whose
age penalty grows at a state-dependent rate (zero, constant, or exponential)
over noisy and collision channels.
"""

__version__ = "0.1.0"
