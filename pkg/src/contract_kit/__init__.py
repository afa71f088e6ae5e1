"""Exact linear-contract computations for single agents and teams."""

from .errors import ConsistencyError, ContractKitError, InvalidArgument, LimitExceeded

__version__ = "0.1.0"

__all__ = ["ConsistencyError", "ContractKitError", "InvalidArgument", "LimitExceeded", "__version__"]
