"""Monte Carlo simulation and validation of degree limits in random family trees."""

from .core import Label, ModelKind, Variant, format_label, parse_label

__all__ = ["Label", "ModelKind", "Variant", "format_label", "parse_label"]
__version__ = "0.1.0"
