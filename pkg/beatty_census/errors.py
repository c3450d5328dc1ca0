# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0
"""Error hierarchy shared by every module.

Each error carries the process exit status the command line front end uses
when the error escapes a subcommand.
"""
import structlog

logger = structlog.stdlib.get_logger()


class BeattyCensusError(Exception):
    exit_code: int = 3

    def __init__(self, message):
        logger.error(str(message), error=type(self).__name__)
        Exception.__init__(self, str(message))


class UsageError(BeattyCensusError):
    """Bad arguments or values outside an operation's domain."""

    exit_code = 2


class DomainError(UsageError):
    """Input outside the range where an analytic formula is defined."""


class InsufficientDataError(UsageError):
    """Not enough evidence to produce an estimate."""


class PrecisionError(BeattyCensusError):
    """Adaptive precision reached its cap without deciding a floor or sign."""


class ResourceError(BeattyCensusError):
    """A configured memory or size cap would be exceeded."""


class InvariantError(BeattyCensusError):
    """An internal consistency check failed."""
