"""Stochastic multi-armed bandits with undirected graph feedback.

Modules: ``graph`` (feedback graphs, independent sets), ``environment``
(reward models), ``policies`` (AAE-IS, AAE-minobs, UCB-N, TS-N),
``simulation`` (compiled run loop), ``layering`` (layer diagnostic),
``numerics`` (Beta/Binomial CDFs and samplers), ``bounds`` (regret-bound
evaluators), ``config``/``harness``/``cli`` (experiments).
"""

__version__ = "0.1.0"
