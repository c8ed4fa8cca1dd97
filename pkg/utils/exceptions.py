class ReviewSentimentError(Exception):
    """Base class for every error raised by the review sentiment pipeline."""


class SchemaError(ReviewSentimentError, ValueError):
    def __init__(self, column, path=None):
        self.column = column
        self.path = path
        where = f" in {path}" if path is not None else ""
        super().__init__(f"Required column '{column}' not found{where}")


class LexiconParseError(ReviewSentimentError, ValueError):
    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"Lexicon line {line_number}: {message}")


class InsufficientDataError(ReviewSentimentError, ValueError):
    pass


class ShapeError(ReviewSentimentError, ValueError):
    pass


class NonFiniteTensorError(ReviewSentimentError, FloatingPointError):
    pass


class GradientCheckError(ReviewSentimentError, AssertionError):
    def __init__(self, worst_block, error, tolerance):
        self.worst_block = worst_block
        self.error = error
        self.tolerance = tolerance
        super().__init__(f"Gradient check failed, worst block '{worst_block}' has relative error {error:.3e} "
                         f"above tolerance {tolerance:.1e}")


class TrainingDivergedError(ReviewSentimentError, RuntimeError):
    pass


class CheckpointError(ReviewSentimentError, ValueError):
    pass


class StageError(ReviewSentimentError, RuntimeError):
    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
