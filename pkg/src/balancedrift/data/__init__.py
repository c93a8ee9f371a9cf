from .csvio import CsvFormatError, load_csv, write_csv
from .dataset import Dataset, DatasetError, ImbalanceSummary, minority_class, summarize
from .openml import FetchError, RegistryMismatch, cross_check, fetch_openml
from .registry import REGISTRY, RegistryEntry, get_entry, registry_csv
from .simulate import SimulationScenario, scenario_grid, simulate
from .split import SplitPair, stratified_split

__all__ = [
    "CsvFormatError",
    "Dataset",
    "DatasetError",
    "FetchError",
    "ImbalanceSummary",
    "REGISTRY",
    "RegistryEntry",
    "RegistryMismatch",
    "SimulationScenario",
    "SplitPair",
    "cross_check",
    "fetch_openml",
    "get_entry",
    "load_csv",
    "minority_class",
    "registry_csv",
    "scenario_grid",
    "simulate",
    "stratified_split",
    "summarize",
    "write_csv",
]
