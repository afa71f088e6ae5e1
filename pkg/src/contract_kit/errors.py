"""Exception types shared across the package."""

import os

DEFAULT_EXHAUSTIVE_LIMIT = 16
EXPLICIT_TABLE_LIMIT = 20


class ContractKitError(Exception):
    """Base class for all errors raised by contract_kit."""


class InvalidArgument(ContractKitError, ValueError):
    pass


class LimitExceeded(ContractKitError):
    """An exhaustive routine was asked to scan a ground set above the limit."""


class ConsistencyError(ContractKitError):
    """An internal invariant failed; signals bad input or a tie-break bug."""


def exhaustive_limit():
    """Largest ground set that brute-force routines will scan.

    Reads ``CONTRACT_KIT_MAX_N`` on every call so tests and the CLI can
    override the default of 16.
    """
    raw = os.environ.get("CONTRACT_KIT_MAX_N")
    if raw is None or raw.strip() == "":
        return DEFAULT_EXHAUSTIVE_LIMIT
    try:
        value = int(raw)
    except ValueError:
        raise InvalidArgument(f"CONTRACT_KIT_MAX_N must be an integer, got {raw!r}")
    if value < 1:
        raise InvalidArgument("CONTRACT_KIT_MAX_N must be positive")
    return value


def require_exhaustive(n, what="exhaustive scan"):
    limit = exhaustive_limit()
    if n > limit:
        raise LimitExceeded(
            f"{what} over n={n} elements needs 2^{n} subsets; limit is {limit} "
            "(set CONTRACT_KIT_MAX_N to raise it)"
        )
