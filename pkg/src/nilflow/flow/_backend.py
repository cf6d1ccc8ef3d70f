"""Kernel selection: the compiled extension when importable, numpy otherwise.

``NILFLOW_BACKEND=python`` forces the fallback.
"""

import importlib
import os

NAMES = ("compiled", "python")
_MODULES = {"compiled": "nilflow.flow._ckernels", "python": "nilflow.flow._pykernels"}


def load(name=None):
    if name is not None:
        if name not in NAMES:
            raise ValueError(f"unknown backend {name!r}; choose from {NAMES}")
        return importlib.import_module(_MODULES[name])
    if os.environ.get("NILFLOW_BACKEND", "").lower() == "python":
        return load("python")
    try:
        return load("compiled")
    except ImportError:
        return load("python")


def available():
    out = []
    for name in NAMES:
        try:
            load(name)
        except ImportError:
            continue
        out.append(name)
    return out


def name_of(module):
    return "compiled" if module.__name__.endswith("_ckernels") else "python"


def thread_cap():
    env = os.environ.get("NILFLOW_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


DEFAULT = load()
BACKEND = name_of(DEFAULT)
