"""Reduced-basis methods for a soft-tissue model coupled to a rigid hand.

Submodules are imported on demand so that the CLI can fix the BLAS thread
count before numpy loads.
"""
__version__ = "0.1.0"
