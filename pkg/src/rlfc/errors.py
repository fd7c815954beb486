"""Exception hierarchy shared across the codec."""


class RlfcError(Exception):
    """Base class for all codec errors."""


class ManifestError(RlfcError):
    """Dataset ingestion failure: missing image, grid gap, resolution mismatch."""


class FormatError(RlfcError):
    """Malformed or corrupt stream: bad magic, truncation, invalid descriptor."""


class UnsupportedCodecError(FormatError):
    """Root codec id is unknown or unavailable in this build."""


class VerificationError(RlfcError):
    """A requested comparison between artifacts failed structurally."""
