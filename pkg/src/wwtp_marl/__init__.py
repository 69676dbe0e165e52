"""Multi-agent actor-critic control of a surrogate activated-sludge plant."""

__version__ = "0.1.0"
