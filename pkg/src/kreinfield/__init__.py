"""kreinfield: a numerical laboratory for indefinite-metric random-field models.

The package builds Euclidean random fields by convolving generalized white
noise with fractional Green kernels, computes their truncated correlation
functions both by Monte Carlo and in closed form, evaluates the associated
relativistic correlation densities in momentum space, and certifies the
Hilbert-majorant structure (growth bounds, Gram majorization, Krein
reduction) at desk scale.
"""

__version__ = "0.1.0"
