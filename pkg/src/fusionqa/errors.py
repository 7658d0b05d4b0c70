"""Exception hierarchy shared by all fusionqa modules."""


class FusionQAError(Exception):
    """Base class for every expected (non-bug) failure in the toolkit."""


class FormatError(FusionQAError, ValueError):
    """A raster file could not be parsed or holds out-of-range values.

    ``row`` and ``col`` point at the offending cell (0-based) when known.
    """

    def __init__(self, message, path=None, row=None, col=None):
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if col is not None:
            where.append(f"col {col}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.path = path
        self.row = row
        self.col = col


class DimensionError(FusionQAError, ValueError):
    """Two rasters that must be co-registered have different shapes."""


class IdenticalImagesError(FusionQAError, ArithmeticError):
    """SNR is undefined because fused and reference bands are identical."""


class UndefinedCorrelationError(FusionQAError, ArithmeticError):
    """Pearson correlation is undefined because an operand has zero variance."""


class DegenerateInputError(FusionQAError, ValueError):
    """Input has no usable pixels for the requested statistic."""
