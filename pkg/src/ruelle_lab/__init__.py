"""Peripheral spectral analysis of wavelet transfer operators.

Modules
-------
lpoly       Laurent polynomials on the unit circle, evaluation and roots.
filterlib   Filters, builtins, JSON I/O and QMF validation.
transfer    The transfer operator on its invariant coefficient window.
cycles      Cycle detection for the map ``z -> z**N``.
peripheral  Peripheral eigenvalues, eigenfunctions, projections, products.
cascade     Cascade iteration and infinite-product oracles.
analysis    The end-to-end pipeline used by the CLI.
"""

__version__ = "0.1.0"
