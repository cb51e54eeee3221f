"""Exception types shared across the package."""


class EpgError(Exception):
    """Base class for all errors raised by this package."""


# -- trace ingest ------------------------------------------------------------

class MalformedTrace(EpgError):
    """The raw document is not decodable as a trace at all."""


class SchemaViolation(EpgError):
    """A required field is missing or has the wrong type."""


class WordOverflow(EpgError):
    """A hex word does not fit in 256 bits."""


class InconsistentDepth(EpgError):
    """The step depth increased without a call-type opcode."""


class TruncatedTrace(EpgError):
    """The step stream ends inside a nested frame."""


# -- flow tracking -----------------------------------------------------------

class ShadowDesync(EpgError):
    """Shadow stack height diverged from the concrete stack."""


class MalformedLog(EpgError):
    """A LOG step had an inconsistent stack; the event was skipped."""


# -- graph construction ------------------------------------------------------

class DanglingSource(EpgError):
    """A record references a data-source version that was never created."""


class SinkFailure(EpgError):
    """Writing an export to its destination failed."""


# -- traversal ---------------------------------------------------------------

class UnknownLabel(EpgError):
    """A traversal names an edge label outside the graph alphabet."""


class PredicateError(EpgError):
    """A filter predicate raised while being evaluated."""


# -- detectors ---------------------------------------------------------------

class NotDescendant(EpgError):
    """succ_block was asked about a frame outside the anchor's subtree."""


class MissingPrice(EpgError):
    """The price table has no row for a token/block pair."""


# -- configuration -----------------------------------------------------------

class BadThreshold(EpgError):
    """A detector threshold is outside its documented range."""


class UnknownKey(EpgError):
    """The config file contains an unrecognized key."""
