"""
Community Utilities Module
Errors, seeds, configuration validation and graph I/O
"""
