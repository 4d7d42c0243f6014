"""Per-object neural fields: synthetic captures, masked training, evaluation."""

try:
    from ._objnerf import *  # noqa: F401,F403  (installed package layout)
except ImportError:
    from _objnerf import *  # noqa: F401,F403  (in-tree build on PYTHONPATH)
