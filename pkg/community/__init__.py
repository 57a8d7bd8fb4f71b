"""
PilotNet Community Detection Module
Distributed spectral clustering with pilot nodes for stochastic block models
"""

__version__ = "1.0.0"
__author__ = "PilotNet Team"

# Package metadata
MESSAGE_FORMAT_VERSION = "1"
MANIFEST_FORMAT_VERSION = "1"
