"""
Configuration package for warpcheck.
"""
