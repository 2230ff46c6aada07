"""Color quantization with weighted sort-means k-means."""

__version__ = "0.1.0"
