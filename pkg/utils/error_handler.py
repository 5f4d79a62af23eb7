import logging
import functools

import streamlit as st

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("relaynet")


class RelayNetError(Exception):
    """Base class for every error raised by the relaynet packages."""


class ValidationError(RelayNetError, ValueError):
    """An input document, matrix or parameter violates a declared invariant."""


class IndexRangeError(RelayNetError, IndexError):
    """Node or antenna index outside the host object, or a forbidden endpoint."""


class CapExceededError(RelayNetError):
    """An exhaustive enumeration would exceed its configured cap."""


class DisconnectedNetworkError(RelayNetError):
    """No source-to-destination path exists through nonzero links."""


class LayeringRequiredError(RelayNetError):
    """A layered-only operation was called on a network without layers."""


class VerificationError(RelayNetError, AssertionError):
    """One or more claims about a constructed network did not hold."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


def exit_code_for(exc):
    """CLI exit code for an exception: 1 for failed verification, 2 for bad input."""
    if isinstance(exc, VerificationError):
        return 1
    return 2


def handle_error(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except Exception as e:
            error_msg = f"Error in {func.__name__}: {str(e)}"
            logger.error(error_msg)
            st.error(error_msg)
            return None
    return wrapper
