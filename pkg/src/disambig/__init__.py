"""Author name disambiguation: graph construction, attention auto-encoding,
density clustering with pseudo-label self-training, and pairwise evaluation."""

__version__ = "0.1.0"
