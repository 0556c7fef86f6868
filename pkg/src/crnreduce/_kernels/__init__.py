"""Hot numerical kernels: compiled extension when built, numpy fallback otherwise.

Set ``CRNREDUCE_PURE_PYTHON=1`` to force the fallback.
"""

import os
from types import SimpleNamespace

import numpy as np

from . import _pykernels

_NAMES = ("tree_weight_sum", "mass_action_rhs", "mass_action_jac")


def _namespace(module, name):
    return SimpleNamespace(name=name, **{k: getattr(module, k) for k in _NAMES})


def available_backends() -> dict:
    out = {"python": _namespace(_pykernels, "python")}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _namespace(_ckernels, "cython")
    return out


_backends = available_backends()
if os.environ.get("CRNREDUCE_PURE_PYTHON") == "1" or "cython" not in _backends:
    active = _backends["python"]
else:
    active = _backends["cython"]

BACKEND = active.name


def tree_weight_sum(w, root):
    return active.tree_weight_sum(np.ascontiguousarray(w, dtype=float), int(root))


def mass_action_rhs(x, source, kappa, stoich):
    return active.mass_action_rhs(np.ascontiguousarray(x, dtype=float), source, kappa, stoich)


def mass_action_jac(x, source, kappa, stoich):
    return active.mass_action_jac(np.ascontiguousarray(x, dtype=float), source, kappa, stoich)
