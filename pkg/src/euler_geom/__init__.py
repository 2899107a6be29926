"""Numerical toolkit for isentropic gas flow with geometric source terms.

Submodules: ``kernels`` (entropy kernels and pairs), ``geometry`` (cross
sections), ``solver`` (finite-volume scheme), ``diagnostics`` (functionals and
a priori estimates), ``fraccalc`` (fractional derivatives of the kernel
profile), ``singular`` (mollified singular pairings), ``youngmeasure``
(commutation relation and reduction checks), ``checks`` (acceptance
batteries) and ``cli``.
"""

__version__ = "0.1.0"
