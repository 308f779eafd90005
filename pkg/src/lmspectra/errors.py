class SpectraError(Exception):
    """Base exception for lm-spectra errors"""
    pass


class InvalidParameterError(SpectraError, ValueError):
    """Invalid parameter or argument combination"""
    pass


class InvalidCellError(InvalidParameterError):
    """Cell is unsorted, out of range or of the wrong dimension"""
    pass


class InvalidWordError(InvalidParameterError):
    """Word letters are malformed or consecutive letters are not adjacent"""
    pass


class KindMismatchError(InvalidParameterError):
    """Operation does not support this matrix kind"""
    pass


class UnknownFunctionError(InvalidParameterError):
    """Unknown mass-transport function id"""
    pass


class ResourceCapError(SpectraError):
    """A configured resource cap was hit"""
    pass


class DenseCapExceededError(ResourceCapError):
    """Matrix dimension is above the dense eigensolver cap"""
    pass


class BallCapExceededError(ResourceCapError):
    """Ball exploration exceeded the vertex or work cap"""
    pass


class EnumerationCapError(ResourceCapError):
    """Word enumeration exceeded the node cap"""
    pass


class SignatureCapError(ResourceCapError):
    """Graph is too large for an exact canonical signature"""
    pass


class NumericalCheckError(SpectraError):
    """Post-condition check of a numerical routine failed"""
    pass
