"""Back-and-forth nudging experiments on Lorenz, 1D periodic PDEs and 2D Navier-Stokes."""

__version__ = "0.1.0"
