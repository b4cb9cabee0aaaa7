"""Self-refinement data pipeline: critic prompting, feedback parsing, and
training-sequence construction, backed by the C++ core."""

try:
    from ._srt_core import *  # noqa: F401,F403  (installed layout)
    from . import _srt_core as _core
except ImportError:
    from _srt_core import *  # noqa: F401,F403  (build-tree layout)
    import _srt_core as _core

__all__ = [name for name in dir(_core) if not name.startswith("_")]
