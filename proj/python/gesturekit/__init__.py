"""Gesture tokenization, masked decoding, TPS warping, edge heatmaps, and metrics."""

try:
    from gesturekit._gesturekit import *  # noqa: F401,F403  (installed wheel layout)
except ImportError:
    from _gesturekit import *  # noqa: F401,F403  (in-tree build on PYTHONPATH)
