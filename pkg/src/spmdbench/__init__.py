"""Vendor-neutral SPMD benchmark suite with interchangeable CPU backends."""

from .exec_model import (Backend, BackendKind, BlockContext, Buffer, Dim3,
                         ElemType, IndexedAccessError, InvalidArgumentError,
                         LaunchConfig, atomic_add, atomic_add_many,
                         available_workers, create_buffer, dim3, launch,
                         parallel_backend, reference_backend)

__version__ = "0.1.0"
