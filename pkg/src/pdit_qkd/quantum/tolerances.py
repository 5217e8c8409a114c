"""Numerical tolerances shared by every module."""

# Normalisation, Hermiticity, unitarity and isometry checks
STRUCTURAL_TOL = 1e-10

# Entropy and distance identities
ENTROPIC_TOL = 1e-9

# Eigenvalues below this are treated as exact zeros in entropies and square roots
EIGENVALUE_FLOOR = 1e-12

# Slack allowed on probabilities that should lie in [0, 1]
PROBABILITY_SLACK = 1e-12

# POVM completeness (sum of elements vs identity), per Hilbert-space dimension
COMPLETENESS_TOL = 1e-9

# Largest completeness defect tolerated before a Neumark extension is refused
COMPLETENESS_DEFECT_TOL = 1e-8

# Probability distributions must sum to one within this
DISTRIBUTION_TOL = 1e-12

# Eigenvalues of an operator below this fraction of its largest are outside its support
SUPPORT_RELATIVE_FLOOR = 1e-10
