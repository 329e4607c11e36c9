from .stencil import (StencilConfig, make_stencil_config, stencil_init,
                      laplacian_kernel, stencil_verify)
from .stream import (StreamConfig, StreamResult, make_stream_config,
                     stream_kernels, stream_expected, dot_product, STREAM_OPS)
from .bude import (BudeDeck, bude_gen_deck, bude_transform, fasten_kernel,
                   fasten_reference, splitmix64)
from .hf import (EriIntermediates, HfSystem, hf_gen_system,
                 load_hf_system, primitive_intermediates, write_hf_input,
                 boys_f0, eri, eri_batch, hf_schwarz, decompose_ijkl,
                 hf_kernel, hf_reference, hf_symmetrize)
