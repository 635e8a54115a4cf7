"""SOM product quantizer feeding a sparse associative memory classifier."""

from ._somsam import *  # noqa: F401,F403
from ._somsam import SomsamError, ShapeError, FormatError  # noqa: F401

__version__ = "0.1.0"
