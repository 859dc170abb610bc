"""API endpoints"""

