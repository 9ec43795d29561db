"""stochsym: symmetry classification and integration toolkit for scalar Ito
stochastic differential equations and their Fokker-Planck equations."""

__version__ = "0.1.0"
