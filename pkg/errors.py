"""
CCGC Error Types
================
Exception base shared by every module. Module-specific errors live at the
bottom of their own module and derive from CCGCError.

Version: 1.0.0
"""

from typing import Optional


class CCGCError(Exception):
    """Base exception for all CCGC errors."""
    pass


class ShapeError(CCGCError):
    """Dimension mismatch between matrices, views or parameters."""
    pass


class ConfigError(CCGCError):
    """Invalid configuration value."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field

    @property
    def flag(self) -> Optional[str]:
        """The command-line flag matching the offending field."""
        if not self.field:
            return None
        return "--" + self.field.replace("_", "-")
