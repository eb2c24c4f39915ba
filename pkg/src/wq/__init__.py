"""Wasserstein quantiles of empirical measures on [0,1] and on 2-D grids."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
