"""Interactive multi-objective Bayesian optimization with preference learning.

The engine maximizes an unknown scalar utility of multiple expensive
objectives.  Objectives get independent Gaussian-process surrogates; the
decision maker's utility is a Chebyshev scalarization whose weight vector is
learned from pairwise comparisons and improvement requests, with queries
chosen by mutual information and evaluation points by expected improvement
marginalized over both sources of uncertainty.
"""

__version__ = "0.1.0"
