"""Exception types raised by the ctpipe library.

Every library error derives from CTPipeError so callers can catch one
base class at CLI or batch boundaries.
"""


class CTPipeError(Exception):
    """Base class for all ctpipe errors."""


class EmptySeries(CTPipeError):
    """A slice series contained no images."""


class InconsistentSlices(CTPipeError):
    """A slice in a series does not match the (H, W) of the first slice."""

    def __init__(self, index: int, expected, got):
        self.index = index
        self.expected = tuple(expected)
        self.got = tuple(got)
        super().__init__(
            f"slice {index} has shape {self.got}, expected {self.expected}"
        )


class DecodeError(CTPipeError):
    """An image file could not be decoded as 8- or 16-bit grayscale."""

    def __init__(self, path, reason: str = ""):
        self.path = str(path)
        detail = f": {reason}" if reason else ""
        super().__init__(f"cannot decode {self.path}{detail}")


class SchemaError(CTPipeError):
    """A manifest row violates the manifest schema."""

    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"manifest row {row}: {message}")


class DuplicateId(CTPipeError):
    """A scan_id appeared more than once in a manifest."""

    def __init__(self, scan_id: str):
        self.scan_id = scan_id
        super().__init__(f"duplicate scan_id {scan_id!r}")


class OutOfRange(CTPipeError):
    """A slice index or trim range is outside the volume."""


class InvalidTarget(CTPipeError):
    """A resize target shape has a non-positive dimension."""


class ZeroCategoryCount(CTPipeError):
    """Inverse-frequency weights requested for a category with zero scans."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"category {index} has zero count")


class LengthMismatch(CTPipeError):
    """Paired label lists have different lengths."""


class NonFiniteInput(CTPipeError):
    """An input that must be finite contained NaN or infinity."""


class ShapeMismatch(CTPipeError):
    """Feature-map splits or weight matrices have inconsistent shapes."""


class BadGrouping(CTPipeError):
    """Channel or reduced dimension is not divisible by the cardinality."""
