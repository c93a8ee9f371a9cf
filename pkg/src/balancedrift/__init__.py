"""Measure how class-balancing methods change classifier behavior.

Subpackages: ``data`` (datasets, simulator, registry), ``balancing``,
``learners``, ``explain`` (PDP/ALE/permutation importance), ``compare``
(SDD/ASDD, balanced accuracy, Wilcoxon + FDR) and ``runner`` (experiment grid
and performance gain plot).
"""

__version__ = "0.1.0"
