"""Cost-sensitive stacked generalization with instance-dependent costs."""

__version__ = "0.1.0"
