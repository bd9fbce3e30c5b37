"""Hard-edge statistics of the Laguerre beta ensemble and their finite-N corrections."""

__version__ = "0.1.0"
