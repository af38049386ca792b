"""Feature-scaling library and reproducible benchmarking harness."""

__version__ = "0.1.0"
