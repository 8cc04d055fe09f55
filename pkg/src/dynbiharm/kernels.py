"""Element kernel backend, chosen at import.

The compiled extension is used when it was built; otherwise the numpy
implementation takes over.  :func:`backends` exposes both for comparison.
"""

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    pass
else:
    _impl = _compiled
    BACKEND = "compiled"

hermite_shape = _kernels_py.hermite_shape
bulk_factor = _impl.bulk_factor
bulk_mass = _impl.bulk_mass
basis_matrix = _impl.basis_matrix


def backends() -> dict:
    """All importable kernel implementations keyed by name."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels as compiled
    except ImportError:
        pass
    else:
        found["compiled"] = compiled
    return found
