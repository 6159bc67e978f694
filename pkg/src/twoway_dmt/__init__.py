"""Two-way MIMO training/feedback protocols: DMT curves, exponent oracle, simulation."""

__version__ = "0.1.0"
