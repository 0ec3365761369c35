"""textcf: anytime, model-agnostic counterfactual explanations for text
classifiers.

Given a black-box classifier, an input text, a target class, a confidence
threshold and a distance function, the search returns a plausible text of
the target class minimizing the distance to the input, improving the answer
for as long as its expensive-call budget lasts.
"""

__version__ = "0.1.0"

from textcf.corpus import Corpus, TokenizedText, clean_text, tokenize
from textcf.models import EcLedger
from textcf.search import (
    CounterfactualResult,
    SearchProblem,
    anytime_search,
    focused_search,
)

__all__ = [
    "Corpus",
    "CounterfactualResult",
    "EcLedger",
    "SearchProblem",
    "TokenizedText",
    "anytime_search",
    "clean_text",
    "focused_search",
    "tokenize",
    "__version__",
]
