"""Exception hierarchy shared across the package."""


class TradecastError(Exception):
    """Base class for every error raised by tradecast."""


class ValidationError(TradecastError, ValueError):
    """Input failed a precondition (bad config, bad argument, bad file)."""


# ingest
class MissingColumn(ValidationError):
    pass


class MalformedRow(ValidationError):
    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class GapInYears(ValidationError):
    def __init__(self, year: int):
        super().__init__(f"no records for year {year}")
        self.year = year


class NegativeValue(ValidationError):
    pass


# nrca
class MissingCell(TradecastError, KeyError):
    pass


class ZeroWorldTrade(TradecastError, ZeroDivisionError):
    pass


class WindowOutOfRange(ValidationError):
    pass


# series statistics
class TooShort(ValidationError):
    pass


class ConstantSeries(ValidationError):
    pass


class RankDeficient(TradecastError, ArithmeticError):
    pass


class StillNonStationary(TradecastError):
    def __init__(self, max_d: int):
        super().__init__(f"series not stationary after {max_d} differences")
        self.max_d = max_d


# estimation
class DegenerateVariance(TradecastError, ArithmeticError):
    pass


class AllFitsFailed(TradecastError):
    pass


class InsufficientLag(ValidationError):
    pass


class ZeroActual(ValidationError, ZeroDivisionError):
    pass


class EmptyInput(ValidationError):
    pass
