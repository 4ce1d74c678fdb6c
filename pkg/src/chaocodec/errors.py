"""Exception taxonomy shared by all chaocodec modules.

Every error raised by the library derives from CodecError so callers can
catch one base class. The CLI maps subclasses onto stable exit codes.
"""


class CodecError(Exception):
    """Base class for all chaocodec errors."""


class ModelError(CodecError):
    """Invalid probability model, alphabet, or map arrangement."""


class FormatError(CodecError):
    """Malformed or truncated container/header/key-file data."""


class DecodeError(CodecError):
    """Decoding left the valid state space; the stream or key is bad."""


class ConfigError(CodecError):
    """Unusable configuration (precision window, brute-force bounds, ...)."""


class KeyMaterialError(CodecError):
    """Key missing, wrong length, or inconsistent with the stream header."""


class CapacityError(CodecError):
    """A key pool or ledger ran out of issuable keys."""


class WrapError(CodecError):
    """Key wrapping/unwrapping failed (unknown scheme, bad authentication)."""


# CLI exit codes: 0 success, 2 format/model, 3 key, 4 capacity.
EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_KEY = 3
EXIT_CAPACITY = 4


def exit_code_for(exc: CodecError) -> int:
    if isinstance(exc, (KeyMaterialError, WrapError)):
        return EXIT_KEY
    if isinstance(exc, CapacityError):
        return EXIT_CAPACITY
    return EXIT_FORMAT
