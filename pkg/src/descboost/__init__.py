"""Zero-shot entity/relation classification boosting.

Generates variations of class descriptions, ranks them by prediction
entropy and combines per-variation prediction pipelines with a
span-level majority vote.
"""

__version__ = "0.1.0"
