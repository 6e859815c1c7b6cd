"""Data-driven spectral-submanifold reduced-order models.

The heavy lifting lives in the compiled extension ``ssmred._ssmred``; this
package re-exports its public surface.
"""

from ._ssmred import *  # noqa: F401,F403
from ._ssmred import __doc__ as _ext_doc  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
