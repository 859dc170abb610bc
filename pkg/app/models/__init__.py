"""Data models and schemas"""

