"""Optimal comparator networks via SAT."""

from .network import (
    Comparator,
    LayeredNetwork,
    NetworkError,
    VectorSet,
    apply_comparator,
    certify,
    evaluate,
    notsorted_set,
    outputs_set,
    parse_ascii,
    parse_eps,
    render_ascii,
    sorted_value,
)

__version__ = "0.1.0"
