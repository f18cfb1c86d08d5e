"""beaverlab: a desk-scale workbench for busy-beaver style questions.

Subpackages:

- core: exact dyadic rationals, bitstrings, weight maps
- tinyvm: the fixed toy machine (plain and prefix-free decoders)
- beaver: stage-bounded tables for the B/BB/BP/BP' queries, the cover
  enumeration, and the plain-to-prefix encoding
- seqkit: semicomputable-sequence machinery (dedup merge, grouping,
  computable minorant, interval allocation)
- games: referees, strategies, and adversaries for the two gap games
- cli: the ``beaverlab`` command-line front end
"""

from .core import Dyadic, WeightMap, weight_tail

__all__ = ["Dyadic", "WeightMap", "weight_tail"]
__version__ = "0.1.0"
