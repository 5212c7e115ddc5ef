"""Post-selected N-qudit states generated by scattering identical bosons or fermions."""

__version__ = "0.1.0"
