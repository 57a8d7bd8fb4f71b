"""
PilotNet API Module
FastAPI endpoints for generation and detection
"""
