"""
Custom exception hierarchy for the stratification toolkit.

This module provides user-friendly exceptions with helpful error messages,
suggestions for fixes, and technical details for debugging. Every exception
carries the process exit code the CLI reports for it: 2 for invalid input,
3 for numerical guards.
"""

from typing import List, Optional, Sequence


class StrataException(Exception):
    """
    Base exception class for all toolkit errors.

    This exception includes user-friendly messages, actionable suggestions,
    and optional technical details for debugging.
    """

    exit_code = 1

    def __init__(
        self,
        user_message: str,
        suggestions: Optional[List[str]] = None,
        technical_details: Optional[str] = None
    ):
        """
        Initialize the exception.

        Args:
            user_message: Human-readable error message
            suggestions: List of suggested solutions or next steps
            technical_details: Technical error details for debugging
        """
        self.user_message = user_message
        self.suggestions = suggestions or []
        self.technical_details = technical_details
        super().__init__(user_message)

    def to_dict(self, include_technical: bool = False) -> dict:
        """
        Convert exception to dictionary format.

        Args:
            include_technical: Whether to include technical details

        Returns:
            Dictionary representation of the exception
        """
        result = {
            "error_type": self.__class__.__name__,
            "user_message": self.user_message,
            "suggestions": self.suggestions,
            "exit_code": self.exit_code
        }

        if include_technical and self.technical_details:
            result["technical_details"] = self.technical_details

        return result


class InputError(StrataException):
    """Invalid parameters, geometry or files supplied by the caller."""

    exit_code = 2


class NumericalGuardError(StrataException):
    """A numerical safeguard refused to produce an unreliable result."""

    exit_code = 3


class SupercriticalityViolated(InputError):
    """Exception raised when p is not above the critical exponent (n+2)/(n-2)."""

    def __init__(self, n: int, p: float, technical_details: str = None):
        critical = (n + 2) / (n - 2) if n > 2 else float("inf")
        user_message = (
            f"Exponent p={p} is not supercritical in dimension n={n}; "
            f"need p > {critical:.6g}"
        )
        suggestions = [
            "Increase p above (n+2)/(n-2)",
            "Use a dimension n >= 3",
        ]
        super().__init__(user_message, suggestions, technical_details)


class EnergyNonIntegrable(InputError):
    """Exception raised when the singular plane is too large for a finite energy."""

    def __init__(self, n: int, m: int, alpha_p: float, technical_details: str = None):
        user_message = (
            f"Singular plane of dimension m={m} gives a non-integrable energy: "
            f"alpha_p={alpha_p:.6g} must be below n-m={n - m}"
        )
        suggestions = [
            "Lower the invariant-direction count m",
            "Increase p so that alpha_p = 2(p+1)/(p-1) decreases",
        ]
        super().__init__(user_message, suggestions, technical_details)


class BadFrame(InputError):
    """Exception raised when a frame is not orthonormal or has the wrong shape."""

    def __init__(self, reason: str, technical_details: str = None):
        user_message = f"Invalid frame: {reason}"
        suggestions = [
            "Supply m orthonormal row vectors of length n",
            "Orthonormalize the frame (for example with a QR decomposition) before use",
        ]
        super().__init__(user_message, suggestions, technical_details)


class OutOfDomain(InputError):
    """Exception raised when a ball leaves the box a field is defined on."""

    def __init__(
        self,
        center: Sequence[float],
        radius: float,
        box: Optional[str] = None,
        technical_details: str = None
    ):
        coords = ", ".join(f"{float(c):.6g}" for c in center)
        user_message = f"Ball of radius {radius:.6g} at ({coords}) is outside the field domain"
        if box:
            user_message += f" {box}"
        suggestions = [
            "Use a smaller radius or move the probe point inward",
            "Sample the field on a larger box",
            "Remember vartheta needs B_10r and density_gap needs B_20r inside the box",
        ]
        super().__init__(user_message, suggestions, technical_details)


class NegativeArgument(InputError):
    """Exception raised when the cutoff is evaluated at a negative argument."""

    def __init__(self, value: float, technical_details: str = None):
        user_message = f"Cutoff argument must be nonnegative, got {value}"
        suggestions = ["Pass squared normalized distances |y-x|^2/r^2"]
        super().__init__(user_message, suggestions, technical_details)


class EmptyRestriction(InputError):
    """Exception raised when a measure has no mass inside the requested ball."""

    def __init__(self, center: Sequence[float], radius: float, technical_details: str = None):
        coords = ", ".join(f"{float(c):.6g}" for c in center)
        user_message = f"Measure has no positive mass in the ball of radius {radius:.6g} at ({coords})"
        suggestions = [
            "Increase the radius",
            "Check that the weights are positive near the probe point",
        ]
        super().__init__(user_message, suggestions, technical_details)


class DimensionMismatch(InputError):
    """Exception raised when two objects have incompatible dimensions."""

    def __init__(self, what: str, expected: int, actual: int, technical_details: str = None):
        user_message = f"Dimension mismatch for {what}: expected {expected}, got {actual}"
        suggestions = ["Compare subspaces of the same dimension in the same ambient space"]
        super().__init__(user_message, suggestions, technical_details)


class UnsupportedOrder(InputError):
    """Exception raised when a derivative order is not available for a field kind."""

    def __init__(self, order: int, field_kind: str, technical_details: str = None):
        user_message = f"Derivative order j={order} is not supported for {field_kind} fields"
        suggestions = [
            "Grid fields support j in {0, 1, 2} for regularity scales",
            "Grid fields support j in {0, 1} for tail distributions",
            "Use an analytic field for higher orders",
        ]
        super().__init__(user_message, suggestions, technical_details)


class OverlappingBalls(InputError):
    """Exception raised when balls expected to be disjoint intersect."""

    def __init__(self, first: int, second: int, technical_details: str = None):
        user_message = f"Balls {first} and {second} overlap; packing checks need disjoint balls"
        suggestions = [
            "Shrink the radii or thin out the centers",
            "Pass explicit radii if the weights do not encode them",
        ]
        super().__init__(user_message, suggestions, technical_details)


class ValidationError(InputError):
    """Exception raised when input validation fails."""

    def __init__(
        self,
        field: str,
        value: str,
        expected: str = None,
        technical_details: str = None
    ):
        """
        Initialize validation error.

        Args:
            field: The field that failed validation
            value: The invalid value
            expected: Description of expected value format
            technical_details: Technical error details
        """
        user_message = f"Invalid value for {field}: '{value}'"
        if expected:
            user_message += f". Expected: {expected}"

        suggestions = [
            "Check the format of your input",
            "Ensure all required parameters are provided",
            "Run the subcommand with --help for valid values",
        ]

        super().__init__(user_message, suggestions, technical_details)


class ConfigurationError(InputError):
    """Exception raised when configuration is invalid."""

    def __init__(
        self,
        config_field: str,
        issue: str,
        technical_details: str = None
    ):
        """
        Initialize configuration error.

        Args:
            config_field: The configuration field that has an issue
            issue: Description of the configuration issue
            technical_details: Technical error details
        """
        user_message = f"Configuration error in {config_field}: {issue}"

        suggestions = [
            "Check your .env file and STRATA_* environment variables",
            "Config files use one key=value pair per line",
            "Flags override config file values",
        ]

        if "thread" in config_field.lower():
            suggestions.append("STRATA_THREADS must be a positive integer")

        super().__init__(user_message, suggestions, technical_details)


class NonFiniteIntegrand(NumericalGuardError):
    """Exception raised when a quadrature meets an infinite or NaN sample."""

    def __init__(self, where: str, technical_details: str = None):
        user_message = f"Integrand is not finite: {where}"
        suggestions = [
            "Leave skip_capped enabled so capped singular cells are excluded",
            "Move the ball off the singular set or use the analytic field",
        ]
        super().__init__(user_message, suggestions, technical_details)


class BallTooSmall(NumericalGuardError):
    """Exception raised when a grid ball contains too few cells."""

    def __init__(self, cells: int, required: int, technical_details: str = None):
        user_message = f"Ball contains {cells} grid cells; at least {required} are required"
        suggestions = [
            "Use a larger radius",
            "Resample the field with a finer spacing",
        ]
        super().__init__(user_message, suggestions, technical_details)


class NonTermination(NumericalGuardError):
    """Exception raised when a recursion exceeds its depth cap."""

    def __init__(self, depth: int, cap: int, technical_details: str = None):
        user_message = f"Covering recursion reached depth {depth}, above the cap {cap}"
        suggestions = [
            "Check that r < R and that rho is below 1/100",
            "Reduce the ratio R/r",
        ]
        super().__init__(user_message, suggestions, technical_details)


class ResolutionTooCoarse(NumericalGuardError):
    """Exception raised when a voxel or cell grid cannot resolve the requested scale."""

    def __init__(self, detail: str, technical_details: str = None):
        user_message = f"Resolution too coarse: {detail}"
        suggestions = [
            "Increase the voxel count per radius",
            "Use a finer grid spacing or larger radii",
        ]
        super().__init__(user_message, suggestions, technical_details)


class CoverageViolation(NumericalGuardError):
    """Exception raised when a cover tree fails its disjointness or coverage check."""

    def __init__(self, detail: str, technical_details: str = None):
        user_message = f"Cover tree check failed: {detail}"
        suggestions = [
            "Increase the pinch-set sample count",
            "Report the configuration; this indicates an inconsistent construction",
        ]
        super().__init__(user_message, suggestions, technical_details)
