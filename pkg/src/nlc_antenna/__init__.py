"""Q-tensor simulation of a liquid-crystal tunable antenna substrate."""

__version__ = "0.1.0"
