"""Statistical disclosure control for tabular microdata."""

from ._accel import BACKEND
from .datamodel import (AttributeSchema, DatasetTable, Taxonomy, load_dataset,
                        load_schema, load_taxonomy, save_dataset, save_schema)
from .errors import (DataFormatError, InfeasibleError, SDCError, TaxonomyError,
                     ValidationError)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AttributeSchema", "DatasetTable", "Taxonomy", "load_dataset",
    "load_schema", "load_taxonomy", "save_dataset", "save_schema", "DataFormatError",
    "InfeasibleError", "SDCError", "TaxonomyError", "ValidationError",
]
