"""Perception-informed neural networks: crisp, fuzzy, probabilistic and
rule-based losses on a small reverse-mode autodiff core, with brute-force
oracles to check what training produces."""

__version__ = "0.1.0"
