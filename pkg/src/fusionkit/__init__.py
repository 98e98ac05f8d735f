"""Multi-sorted first-order toolkit.

Submodules:

- ``logic``: signatures, language families, terms, formulas, classification.
- ``parser``: concrete formula syntax.
- ``files``: signature, structure, and rank-table file formats.
- ``normal_forms``: flattening, bounded-existential forms, DNF splitting,
  relationalization, and definitional expansions.
- ``semantics``: finite structures, evaluation, definable-set enumeration,
  automorphisms and closure operators, flat diagrams.
- ``fusion``: separation search, interpolativity checks, interpolant
  construction, joint consistency.
- ``pseudotopology``: rank functions, pseudo-density and pseudo-closures,
  axiom emission, definable topologies, decomposition.
- ``encodings``: largeness and generic predicates, random-graph,
  automorphism, and Skolemization encodings with their decoders.
- ``cli``: the ``fusionkit`` command-line interface.
"""

__version__ = "0.1.0"
