"""Python bindings for the opsqa pipeline core."""

try:
    from ._opsqa import *  # noqa: F401,F403  (installed package layout)
    from ._opsqa import __doc__ as _core_doc
except ImportError:  # in-tree build: extension sits on PYTHONPATH
    from _opsqa import *  # noqa: F401,F403
    from _opsqa import __doc__ as _core_doc

__doc__ = _core_doc or __doc__
