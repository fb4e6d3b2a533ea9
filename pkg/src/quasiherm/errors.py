"""Exception hierarchy shared by all quasiherm modules."""

from __future__ import annotations


class QuasiHermError(Exception):
    """Base class for every domain error raised by the toolkit."""


class DimensionMismatch(QuasiHermError, ValueError):
    pass


class InvalidDimension(QuasiHermError, ValueError):
    pass


class ConvergenceFailure(QuasiHermError, RuntimeError):
    pass


class CertificationError(QuasiHermError):
    """A metric or observable failed one of the certification gates.

    ``gate`` names the failed gate (``"hermitian"``, ``"positive-definite"``
    or ``"quasi-hermitian"``) and ``residual`` carries the offending number.
    """

    gate = "unknown"

    def __init__(self, message: str, residual: float | None = None, gate: str | None = None):
        super().__init__(message)
        self.residual = residual
        if gate is not None:
            self.gate = gate


class NotHermitian(CertificationError):
    gate = "hermitian"


class NotPositiveDefinite(CertificationError):
    gate = "positive-definite"


class NotQuasiHermitian(CertificationError):
    gate = "quasi-hermitian"


class CandidateFailsCertification(CertificationError):
    """Raised by ambiguity generation; ``gate`` is copied from the cause."""


class NotHermitianInput(NotHermitian):
    pass


class IllDefinedMetric(CertificationError):
    gate = "metric-domain"


class TruncationUnconverged(CertificationError):
    gate = "truncation"


class ComplexSpectrumRegime(QuasiHermError, ValueError):
    pass


class FitResidualTooLarge(QuasiHermError, RuntimeError):
    pass


class DegenerateParams(QuasiHermError, ValueError):
    pass


class LoopHitsEP(QuasiHermError, ValueError):
    pass


class NearDefective(QuasiHermError, ValueError):
    pass


class ZeroNorm(QuasiHermError, ValueError):
    pass


class DegenerateSpectrum(QuasiHermError, ValueError):
    pass
