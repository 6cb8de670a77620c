"""
warpcheck: closed-form checks for doubly warped products and space-times,
certified against a brute-force tensor oracle.
"""
from configs import config, logging_config

__version__ = '0.3.0'
__author__ = 'Matthew Zujewski'
