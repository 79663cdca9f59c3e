"""From-scratch tabular binary classifiers for survey non-response prediction."""

__version__ = "0.1.0"
