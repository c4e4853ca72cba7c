"""Grouped, clustered nonlinear classifiers (C++ core)."""

try:
    from ._gkmnc import *  # noqa: F401,F403
    from ._gkmnc import GkmncError, MODEL_FORMAT_VERSION  # noqa: F401
except ImportError:  # in-tree build: extension sits next to the CMake outputs
    from _gkmnc import *  # noqa: F401,F403
    from _gkmnc import GkmncError, MODEL_FORMAT_VERSION  # noqa: F401
