"""Substitution-based multilingual word sense induction toolkit."""

__version__ = "0.1.0"

from subsense.data import Dataset, Instance, SenseClustering, load_dataset, save_dataset
from subsense.substitutes import SubstituteCandidate, SubstituteSet

__all__ = [
    "Dataset",
    "Instance",
    "SenseClustering",
    "SubstituteCandidate",
    "SubstituteSet",
    "load_dataset",
    "save_dataset",
]
