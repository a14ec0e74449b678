"""Simulation of photon transfer between two detuned optical cavities coupled
through a vibrating mirror.

The mirror's displacement tunes the cavity detuning; radiation pressure from a
sufficiently bright cavity pushes the mirror through the point where the two
cavities become degenerate, and the photons hop across during that sweep.
The package provides a direct mean-field integrator, a closed-form
instantaneous-eigenmode solution, transfer-fidelity formulas for several
input-state families, and an exact truncated-Fock-space propagator used as a
numerical oracle at toy scale.
"""

__version__ = "0.1.0"


class ConfigError(ValueError):
    """Invalid run configuration (bad keys, bad values, unreadable file)."""


class IntegrationError(RuntimeError):
    """Integration failed; carries the partial trajectory if available."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class TruncationError(RuntimeError):
    """Phonon basis too small; carries a suggested cutoff."""

    def __init__(self, message, suggested_m_max=None):
        super().__init__(message)
        self.suggested_m_max = suggested_m_max
