"""kgaudit: knowledge-graph-grounded audit of model diagnostic reasoning."""

__version__ = "0.1.0"
