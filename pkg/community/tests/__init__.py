"""
Test Suite for PilotNet
"""
