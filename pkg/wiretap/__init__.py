# Wiretap Capacity - amplitude-constrained Gaussian wiretap channel

__version__ = "1.0.0"
