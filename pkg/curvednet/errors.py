"""
Error Types
===========
Exception hierarchy for the toolkit. Every class carries the CLI exit
code it maps to, so the command layer never has to guess.
"""

# ── Exit codes (stable CLI contract) ────────────────────
EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_TRAINING_DIVERGED = 3
EXIT_METRIC_PRECONDITION = 4
EXIT_GRADCHECK_FAILED = 5


class CurvedNetError(RuntimeError):
    """Base class for every error raised by curvednet."""

    exit_code = EXIT_INPUT_ERROR


# ── Geometry ────────────────────────────────────────────


class BadCurvature(CurvedNetError, ValueError):
    """Curvature has the wrong sign (or is zero / non-finite) for the space."""


class ZeroVector(CurvedNetError, ValueError):
    """A zero vector cannot be projected onto the sphere."""


class CurvatureMismatch(CurvedNetError, ValueError):
    """Two points from balls of different curvature were combined."""


class Singularity(CurvedNetError, ArithmeticError):
    """A denominator vanished (conformal factor or MLR hyperplane term)."""


class ManifoldViolation(CurvedNetError, ValueError):
    """A point does not satisfy the invariant of its manifold."""


class DimMismatch(CurvedNetError, ValueError):
    """Operand dimensions disagree."""


class BadLabel(CurvedNetError, ValueError):
    """A class label is outside [0, C)."""


class LengthMismatch(CurvedNetError, ValueError):
    """Two probability vectors have different lengths."""


class EmptyComponents(CurvedNetError, ValueError):
    """A product score was requested over zero component scores."""


class DegenerateMap(UserWarning):
    """Hyperbolic linear map sent a non-zero point to ||Wx|| = 0."""


# ── Training ────────────────────────────────────────────


class NonScalarOutput(CurvedNetError, ValueError):
    """Reverse pass requested from a node that is not a scalar."""


class NonFiniteGradient(CurvedNetError, FloatingPointError):
    exit_code = EXIT_TRAINING_DIVERGED


class NonFiniteLoss(CurvedNetError, FloatingPointError):
    """Training loss became NaN or infinite; carries epoch diagnostics."""

    exit_code = EXIT_TRAINING_DIVERGED

    def __init__(self, message, epoch=None, batch=None, branch_losses=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
        self.branch_losses = dict(branch_losses or {})


class EmptyDataset(CurvedNetError, ValueError):
    """Training was asked to run on zero samples."""


# ── Data & files ────────────────────────────────────────


class BadSpec(CurvedNetError, ValueError):
    """Hierarchy generator specification is invalid."""


class ParseError(CurvedNetError, ValueError):
    """Malformed input file; ``line`` is 1-based."""

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.path = path


class DimInconsistent(ParseError):
    """A row's feature count differs from the declared dimension."""


class UnknownSplitTag(ParseError):
    """Split column is not one of train / test_id / test_ood."""


class TrainPurityError(CurvedNetError, ValueError):
    """An OOD sample reached the training split."""


class ClassTooSmall(CurvedNetError, ValueError):
    """A class has too few samples for a stratified split."""


class ConfigError(CurvedNetError, ValueError):
    """Run configuration file is invalid."""


class ModelFormatError(CurvedNetError, ValueError):
    """Model file is not a valid CURVEDNET-MODEL-v1 document."""


class ModelDataDimMismatch(CurvedNetError, ValueError):
    """Model input dimension differs from the data dimension."""


class EmptyScores(CurvedNetError, ValueError):
    """A density report was requested over zero scores."""


# ── Evaluation ──────────────────────────────────────────


class OneClassOnly(CurvedNetError, ValueError):
    """Metric needs both ID and OOD samples."""

    exit_code = EXIT_METRIC_PRECONDITION


class GradCheckFailed(CurvedNetError):
    exit_code = EXIT_GRADCHECK_FAILED
