"""Epistemic model checking over belief bases, Kripke models and belief structures."""

__version__ = "0.1.0"
