"""Budget-constrained lifelong configuration planning with distilled
knowledge seeding, plus baselines and a benchmark harness."""

__version__ = "0.1.0"
