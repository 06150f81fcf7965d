"""Exact worst-case risk of norm-bounded interpolators (C++ core)."""

try:
    from ._core import *  # noqa: F401,F403  (installed package layout)
    from ._core import __version__  # noqa: F401
except ImportError:
    # in-tree builds place the extension on PYTHONPATH next to this package
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
