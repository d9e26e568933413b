"""Work extraction enabled by QND measurements of a qubit in a non-Markovian bath."""
from .bath import BathSpec, response_finite_T, response_zero_T
from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionCapError,
    NumericalError,
    QNDWorkError,
    QuadratureError,
    SecondLawViolation,
)
from .kernels import KernelTable, polarization_trajectory, relaxation_integrals
from .modulation import DriveSpec, FourierDrive
from .work import WorkLedger

__version__ = "0.1.0"
