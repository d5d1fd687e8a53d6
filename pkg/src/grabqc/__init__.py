"""Graph-based query contextualization for ICD code retrieval."""

__version__ = "0.1.0"
