"""Top-N truncated list-wise ranking for implicit feedback.

The heavy lifting lives in the compiled ``_topnrank`` extension; this package
re-exports it.
"""

try:
    from ._topnrank import *  # noqa: F401,F403
    from ._topnrank import __version__  # noqa: F401
except ImportError:  # in-tree build: the extension sits next to this package
    from _topnrank import *  # noqa: F401,F403
    from _topnrank import __version__  # noqa: F401
