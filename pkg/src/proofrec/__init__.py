"""proofrec: next-command recommendation and lemma retrieval learned from
interactive proof traces."""

from proofrec._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
