"""Sliding-mode control simulation on non-Euclidean state spaces."""

try:
    from ._geosmc import *  # noqa: F401,F403  (installed layout)
    from ._geosmc import __doc__ as _doc
except ImportError:  # build-tree layout used by the ctest smoke tests
    from _geosmc import *  # noqa: F401,F403
    from _geosmc import __doc__ as _doc

__doc__ = _doc
__version__ = "0.1.0"
