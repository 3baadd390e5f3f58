"""Interactive machine translation workbench.

Core pieces: BPE tokenization with word-boundary tracking, translation-memory
fuzzy retrieval, deterministic toy sequence models, nearest-neighbor augmented
decoding, subword-prefix constrained beam search, the suggestion box, an
evaluation harness, and a FastAPI post-editing service with a CLI front-end.
"""

__version__ = "0.1.0"
