"""Leader-class and confidence decision ensemble (native extension)."""

from ._lccde import (
    MODEL_NAMES,
    BoosterConfig,
    Dataset,
    Model,
    arbitrate,
    load_can_hex,
    load_numeric_csv,
    metrics,
    select_leaders,
    train,
)

__all__ = [
    "MODEL_NAMES",
    "BoosterConfig",
    "Dataset",
    "Model",
    "arbitrate",
    "load_can_hex",
    "load_numeric_csv",
    "metrics",
    "select_leaders",
    "train",
]
