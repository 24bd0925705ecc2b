"""Graph structural tokenization toolkit.

Maps each graph's topology to a single discrete structural token via a
quantized graph autoencoder, and emits the alignment corpora, downstream
prompt files, and evaluation metrics built around those tokens.
"""

__version__ = "0.1.0"
