"""Wavelet-gated monocular depth estimation on a tape-based autodiff core.

Modules: ``autodiff`` (tensors and reverse mode), ``wavelet``/``haar`` (Haar
DWT), ``gwt`` (gated subband rectification block), ``losses``, ``metrics``,
``spectral`` (power-law spectrum fits), ``synthdata`` (tube renderer),
``model`` (toy ViT + decoder, AdamW, training), ``reconstruct`` (point
clouds), ``io`` and ``config``; ``cli`` is the command-line front end.
"""

__version__ = "0.1.0"
