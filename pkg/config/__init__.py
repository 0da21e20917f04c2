# config/__init__.py
"""
Configuration package for the Fictitious Control Framework.
"""

from .config import *
