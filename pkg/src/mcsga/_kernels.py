"""Backend selection for the hot loops.

The compiled ``_core`` extension is used when importable; otherwise the
numpy implementations in ``_fallback`` take over. Set ``MCSGA_BACKEND=python``
to force the fallback.
"""

import os

if os.environ.get("MCSGA_BACKEND", "").lower() == "python":
    from . import _fallback as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import _fallback as _impl

        BACKEND = "python"

window_area = _impl.window_area
fold_pauc_batch = _impl.fold_pauc_batch
grow_tree = _impl.grow_tree
forest_votes = _impl.forest_votes
smo_solve = _impl.smo_solve

__all__ = ["BACKEND", "window_area", "fold_pauc_batch", "grow_tree", "forest_votes", "smo_solve"]
