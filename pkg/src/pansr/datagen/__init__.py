"""Synthetic benchmark generation."""

from .generate import (
    SCENARIOS,
    Dataset,
    DatasetSpec,
    GenerationError,
    friedman_scenario,
    generate,
    rows_for,
    split_indices,
    train_test_split,
)
from .io import read_dataset, write_dataset

__all__ = [
    "SCENARIOS",
    "Dataset",
    "DatasetSpec",
    "GenerationError",
    "friedman_scenario",
    "generate",
    "read_dataset",
    "rows_for",
    "split_indices",
    "train_test_split",
    "write_dataset",
]
