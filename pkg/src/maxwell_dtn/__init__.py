"""hp-FEM for time-harmonic Maxwell on the unit ball with the exact capacity operator."""

__version__ = "0.1.0"
