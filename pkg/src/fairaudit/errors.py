"""Exception types shared across the toolkit."""


class FairnessAuditError(Exception):
    """Base class for all errors raised by this package."""


class NoRecordsError(FairnessAuditError):
    """Raised when an operation requires at least one prediction record."""


class RocUndefinedError(FairnessAuditError):
    """Raised when a ROC curve cannot be built (missing scores or a single-class group)."""


class DatasetError(FairnessAuditError):
    """Raised for descriptor or CSV problems: bad columns, uncovered target values, unparseable cells."""


class ModelError(FairnessAuditError):
    """Raised for invalid training inputs or model/feature dimension mismatches."""
