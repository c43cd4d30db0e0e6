"""Shared exception types. Every failure the tool reports deliberately derives
from ToolError so the CLI can distinguish diagnosed errors from crashes."""

from __future__ import annotations


class ToolError(Exception):
    """Base class for all deliberate tool failures."""


class ConfigError(ToolError):
    pass


class CharLibError(ToolError):
    pass


class AllocationError(ToolError):
    pass


class ScheduleError(ToolError):
    pass


class BindingError(ToolError):
    pass


class FsmdError(ToolError):
    pass


class InterfaceError(ToolError):
    pass


class EmitError(ToolError):
    pass


class SimError(ToolError):
    pass


class HdlError(ToolError):
    """Raised for text outside the emitted HDL subset."""


class CorpusError(ToolError):
    pass
