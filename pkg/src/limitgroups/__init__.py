"""Limit groups: free group words, graphs of groups, discrimination and shortening."""

__version__ = "0.1.0"
