"""
valleymap

Simulator and analysis toolkit for valley-splitting mapping in Si/SiGe by
conveyor-mode spin shuttling, with a magnetospectroscopy benchmark.
Provides the forward model, synthetic landscapes and maps, and the inverse
pipeline from probability maps to E_VS landscapes and disorder statistics.
"""

__version__ = "0.1.0"
