"""Cost-aware routing between a strong and a weak language model.

Builds preference data from uncertainty over sampled generations, trains
embedding-based routers on it, evaluates them with recorded-response
sweeps, and serves decisions over HTTP.
"""

__version__ = "0.1.0"
