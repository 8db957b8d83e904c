"""Square-root-law variable-bandwidth kernel density estimation and its analysis tools."""

__version__ = "0.1.0"
