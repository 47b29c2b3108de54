"""Exception hierarchy shared by every stage of the engine."""


class CorefError(Exception):
    """Base class for all engine errors."""


class EmptyInput(CorefError):
    pass


class MalformedLine(CorefError):
    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class InconsistentChain(CorefError):
    pass


class InvalidSpec(CorefError):
    pass


class MissingAnnotations(CorefError):
    pass


class UnknownSieveName(CorefError):
    pass


class SameEntity(CorefError):
    pass


class NotAPronoun(CorefError):
    pass


class CandidateNotPreceding(CorefError):
    pass


class DimensionMismatch(CorefError):
    pass


class RaggedDimensions(CorefError):
    def __init__(self, lineno: int, expected: int, got: int):
        self.lineno = lineno
        super().__init__(f"line {lineno}: expected {expected} components, got {got}")


class EmptyFile(CorefError):
    pass


class NoGoldChains(CorefError):
    pass


class EmptyTrainingSet(CorefError):
    pass


class VocabMismatch(CorefError):
    pass


class TooFewDocuments(CorefError):
    pass


class ModelModeMismatch(CorefError):
    pass


class MissingGold(CorefError):
    pass


class ConfigError(CorefError):
    pass
