"""Exception hierarchy.

Validation problems (bad input, inadmissible parameters) and numerical
failures (resonances, singular resolvents, Fermi-pole proximity) are kept
apart so the command line can map them to different exit codes.
"""


class TBVerdetError(Exception):
    """Base class for all package errors."""


class ValidationError(TBVerdetError, ValueError):
    """Input rejected before any computation starts."""


class AdmissibilityError(ValidationError):
    """Frequency too small compared with the spectral radius of the Hamiltonian."""


class PoleEnclosureError(ValidationError):
    """The contour (or eta) would reach a Fermi-Dirac pole."""


class NumericalError(TBVerdetError, ArithmeticError):
    """A computation hit a singular or near-singular configuration."""


class SingularityError(NumericalError):
    """Resolvent evaluated too close to an eigenvalue."""


class DegeneracyError(NumericalError):
    """Near-resonant denominator in a closed-form residue sum."""


class PoleProximityError(NumericalError):
    """Fermi-Dirac function evaluated too close to one of its poles."""
