"""Exception hierarchy shared by all modules."""


class RadonBarcodeError(Exception):
    """Base class for every error raised by this package."""


# imaging
class UnsupportedFormat(RadonBarcodeError, ValueError):
    pass


class CorruptImage(RadonBarcodeError, ValueError):
    pass


class InvalidDimensions(RadonBarcodeError, ValueError):
    pass


# radon
class NonSquareImage(RadonBarcodeError, ValueError):
    pass


class InvalidAngleCount(RadonBarcodeError, ValueError):
    pass


class IndexOutOfRange(RadonBarcodeError, IndexError):
    pass


# barcode
class InvalidWindow(RadonBarcodeError, ValueError):
    pass


class IncomparableBarcodes(RadonBarcodeError, ValueError):
    pass


class MalformedBarcodeText(RadonBarcodeError, ValueError):
    pass


# index
class DuplicateId(RadonBarcodeError, ValueError):
    pass


class EmptyIndex(RadonBarcodeError, ValueError):
    pass


class InvalidK(RadonBarcodeError, ValueError):
    pass


class InvalidLshConfig(RadonBarcodeError, ValueError):
    pass


class MissingImageRef(RadonBarcodeError, ValueError):
    pass


class EmptyCandidates(RadonBarcodeError, ValueError):
    pass


class FormatVersionMismatch(RadonBarcodeError, ValueError):
    pass


class CorruptIndexFile(RadonBarcodeError, ValueError):
    pass


# irma
class MalformedCode(RadonBarcodeError, ValueError):
    pass


class EmptyCorpus(RadonBarcodeError, ValueError):
    pass


class InconsistentAxisLengths(RadonBarcodeError, ValueError):
    pass


class AxisLengthMismatch(RadonBarcodeError, ValueError):
    pass


class MissingBranchEntry(RadonBarcodeError, KeyError):
    pass
