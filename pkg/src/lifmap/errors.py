"""Exception hierarchy shared by the simulator, loaders and CLI."""


class LifmapError(Exception):
    """Base class for all package errors."""


class DomainError(LifmapError, ValueError):
    """A value lies outside the mathematical domain of an operation."""


class GridMismatchError(LifmapError, ValueError):
    """Spike trains that must share a time grid do not."""


class ShapeError(LifmapError, ValueError):
    """Array or layer shapes do not compose."""


class ConversionError(DomainError):
    """ANN -> SNN conversion failed for one or more neurons.

    ``offenders`` lists ``(layer_name, neuron_index, reason)`` tuples.
    """

    def __init__(self, message, offenders=()):
        super().__init__(message)
        self.offenders = list(offenders)


class UndefinedCorrelationError(DomainError):
    """Pearson correlation requested for a zero-variance series."""


class ManifestError(LifmapError):
    """Malformed weight manifest."""


class MissingTensorError(ManifestError, KeyError):
    """A layer asks for a tensor the bundle does not contain."""

    def __str__(self):
        return Exception.__str__(self)


class TensorShapeError(ManifestError, ShapeError):
    """Declared tensor shape disagrees with the data or the layer."""


class ChecksumError(ManifestError):
    """Sidecar blob does not match the manifest checksum."""
