"""Privacy-preserving federated recommendation over heterogeneous graphs.

Clients publish locally perturbed interactions once (exponential-mechanism
shared-HIN selection plus degree-preserving randomized response), the
server recovers meta-path neighbors from the perturbed graph, and a
two-level-attention graph model is trained federatedly with LDP gradient
uploads. An enumeration-based verifier checks the privacy bounds.
"""

__version__ = "0.1.0"
