"""Physical-layer simulator for retroreflective optical integrated sensing and communication."""

__version__ = "0.1.0"
