"""Exception hierarchy shared by every stage of the pipeline."""


class DrowsyHrvError(Exception):
    """Base class for all library errors."""


# -- feature extraction ------------------------------------------------------

class FeatureError(DrowsyHrvError):
    """A window could not produce a feature value.

    ``group`` is filled in by the feature assembler with the name of the
    feature group (time, frequency, nonlinear) that failed.
    """

    def __init__(self, message: str, group: str | None = None):
        super().__init__(message)
        self.group = group


class TooFewBeats(FeatureError):
    pass


class SignalTooShort(FeatureError):
    pass


class DegenerateSpectrum(FeatureError):
    pass


class DegenerateGeometry(FeatureError):
    pass


class DegenerateSeries(FeatureError):
    pass


# -- labeling / dataset ------------------------------------------------------

class DegenerateBaseline(DrowsyHrvError):
    pass


class EmptyDataset(DrowsyHrvError):
    pass


class ClassTooSmall(DrowsyHrvError):
    pass


# -- models ------------------------------------------------------------------

class KTooLarge(DrowsyHrvError):
    pass


class NoConvergence(DrowsyHrvError):
    pass


class ClassTooSmallForFolds(DrowsyHrvError):
    pass


class NotFitted(DrowsyHrvError):
    pass


# -- explanations ------------------------------------------------------------

class BudgetTooSmall(DrowsyHrvError):
    pass


class TargetTooLarge(DrowsyHrvError):
    pass


# -- adversarial -------------------------------------------------------------

class EmptyClass(DrowsyHrvError):
    pass


# -- orchestration -----------------------------------------------------------

class ConfigInvalid(DrowsyHrvError):
    pass


class InputMissing(DrowsyHrvError):
    pass


class ArtifactMissing(DrowsyHrvError):
    pass
