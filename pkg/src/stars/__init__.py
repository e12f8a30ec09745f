"""Goal elicitation, vetting, and one-shot task learning for a simulated household robot."""

__version__ = "0.1.0"
