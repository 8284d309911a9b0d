"""
Stancelab - Errors
Exception types raised by the core modules
"""


class StancelabError(Exception):
    """Base class for all stancelab errors"""


class FormatError(StancelabError, ValueError):
    """Input file does not follow the expected format"""


class PreconditionError(StancelabError, ValueError):
    """An operation was called with arguments outside its contract"""


class DataError(StancelabError, ValueError):
    """Inputs are well-formed but inconsistent with each other"""


class DomainError(StancelabError, ValueError):
    """A formula was evaluated outside its domain"""


class ConfigError(StancelabError, ValueError):
    """Invalid or incomplete configuration"""


class ClusterLookupError(StancelabError, KeyError):
    """Unknown cluster id"""


class StageError(StancelabError):
    """A pipeline stage failed for a topic"""

    def __init__(self, stage: str, topic: str, cause: BaseException):
        self.stage = stage
        self.topic = topic
        self.cause = cause
        super().__init__(f"stage '{stage}' failed for topic '{topic}': {cause}")
