"""alloy2fa: compile a core Alloy fragment to variable-free fork-algebra facts.

The pipeline parses a restricted Alloy model, expands its formulas into
relational logic (quantifiers plus tuple applications), eliminates the
variables by strategic rewriting, and emits the resulting facts and goals
as Prover9 input or a LaTeX derivation.  A finite-model oracle checks each
translation against the source semantics on small universes.
"""

__version__ = "0.1.0"
