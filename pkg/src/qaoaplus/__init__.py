"""QAOA+, standard QAOA and multi-angle QAOA for MaxCut on regular graphs."""

__version__ = "0.1.0"
