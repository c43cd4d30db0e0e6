"""Component characterization library and its XML persistence."""

from .model import DefaultModel, canon_decimal, OPCODES, PRECISION
from .library import (
    ComponentTemplate, CharacterizationRecord, ComponentLibrary,
    TargetDescriptor, enumerate_configurations, characterize,
    build_library, lookup, parse_clock, MAX_WIDTH, DEFAULT_MAX_STAGES,
)
from .xmlio import export_xml, import_xml

__all__ = [
    "DefaultModel", "canon_decimal", "OPCODES", "PRECISION",
    "ComponentTemplate", "CharacterizationRecord", "ComponentLibrary",
    "TargetDescriptor", "enumerate_configurations", "characterize",
    "build_library", "lookup", "parse_clock", "MAX_WIDTH",
    "DEFAULT_MAX_STAGES", "export_xml", "import_xml",
]
