"""
Community Detection Source Package
SBM generators, spectral routines, the distributed engine, metrics and experiments
"""
