"""Anthropometric measurements to parametric body shapes and back, inverse
kinematics mesh fitting, and shape-consistency auditing."""

__version__ = "0.1.0"
