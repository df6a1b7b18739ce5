"""Select the propagation kernel: compiled if importable, else pure Python.

Set ``OTFSYNTH_PURE=1`` to force the fallback.
"""

import os

from ._kernel_py import LOSE, UNDECIDED, WIN
from ._kernel_py import Classifier as PyClassifier

CClassifier = None
if os.environ.get("OTFSYNTH_PURE") != "1":
    try:
        from ._kernel import Classifier as CClassifier
    except ImportError:  # extension not built
        CClassifier = None

Classifier = CClassifier or PyClassifier
BACKEND = "cython" if CClassifier is not None else "python"

__all__ = ["BACKEND", "CClassifier", "Classifier", "LOSE", "PyClassifier", "UNDECIDED", "WIN"]
