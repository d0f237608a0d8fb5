"""ERGM estimation toolkit.

Estimation of exponential-family random graph models on small-to-medium
undirected networks: maximum pseudolikelihood (logistic regression over
dyads), Markov-chain Monte Carlo maximum likelihood with degeneracy
diagnostics, an exact enumeration oracle for small node counts, and a
simulated-annealing search for statistic-matched networks whose
pseudolikelihood estimates serve as improved MCMC-MLE starting values.
"""

from .network import Network, DyadIndex, dyad_count
from .stats import (
    Edges,
    Triangles,
    KStar,
    DegreeCount,
    GwDegree,
    NodeCovariateSum,
    ModelSpec,
    parse_model_config,
    stat_vector,
    change_vector,
    stat_delta_on_toggle,
)

__version__ = "0.1.0"

__all__ = [
    "Network",
    "DyadIndex",
    "dyad_count",
    "Edges",
    "Triangles",
    "KStar",
    "DegreeCount",
    "GwDegree",
    "NodeCovariateSum",
    "ModelSpec",
    "parse_model_config",
    "stat_vector",
    "change_vector",
    "stat_delta_on_toggle",
    "__version__",
]
