"""Exception types raised by foalab."""


class FoalabError(Exception):
    """Base class for all foalab errors."""


class ValidationError(FoalabError, ValueError):
    """An input value violates a documented invariant."""


class ShapeMismatchError(FoalabError, ValueError):
    """Two grids or signals that must share a shape do not."""


class SampleRateMismatchError(FoalabError, ValueError):
    """Signals combined in one operation have different sample rates."""


class WavChannelError(FoalabError, ValueError):
    """WAV file does not carry exactly 4 channels."""


class WavEncodingError(FoalabError, ValueError):
    """WAV file uses an encoding other than PCM16 or 32-bit float."""


class WavTruncatedError(FoalabError, ValueError):
    """WAV file ends before the declared chunk sizes are satisfied."""


class InsufficientDataError(FoalabError, ValueError):
    """Not enough latent vectors to initialize the requested codebook.

    Supply at least as many (preferably distinct) vectors as codebook
    entries; the initializer never duplicates data silently.
    """


class NoDirectionalEnergyError(FoalabError, ValueError):
    """Every time-frequency bin was masked out; no DOA can be estimated."""


class MissingSourceError(FoalabError, KeyError):
    """A scene manifest references a source id with no audio supplied."""
