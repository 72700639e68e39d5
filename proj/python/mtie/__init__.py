"""Multi-turn zero-shot information extraction.

Thin bindings over the C++ core: schemas, dataset loaders, answer parsers,
the extraction pipeline (gold-oracle and replay backends) and scoring.
Live endpoints are reached through the ``mtie`` command-line tool.
"""

from pathlib import Path

from ._mtie import (
    BatchReport,
    Error,
    Sample,
    TaskSchema,
    is_none_signal,
    load_dataset,
    load_schema,
    parse_entity_list,
    parse_event_types,
    parse_pair_table,
    parse_role_table,
    parse_schema,
    parse_type_list,
    read_batch_report,
    run_batch,
    score,
    subsample,
    token_f1,
    transcript_key,
)

_SCHEMA_DIR = Path(__file__).resolve().parent / "schemas"
if not _SCHEMA_DIR.is_dir():
    # editable install: schemas live in the source tree
    _SCHEMA_DIR = Path(__file__).resolve().parents[2] / "data" / "schemas"


def shipped_schemas():
    """Names of the schemas bundled with the package."""
    return sorted(p.stem for p in _SCHEMA_DIR.glob("*.yaml"))


def shipped_schema(name):
    """Load a bundled schema by name, e.g. ``shipped_schema("conllpp")``."""
    path = _SCHEMA_DIR / f"{name}.yaml"
    if not path.exists():
        raise KeyError(f"no shipped schema named {name!r}; have {shipped_schemas()}")
    return load_schema(path)


__all__ = [
    "BatchReport",
    "Error",
    "Sample",
    "TaskSchema",
    "is_none_signal",
    "load_dataset",
    "load_schema",
    "parse_entity_list",
    "parse_event_types",
    "parse_pair_table",
    "parse_role_table",
    "parse_schema",
    "parse_type_list",
    "read_batch_report",
    "run_batch",
    "score",
    "shipped_schema",
    "shipped_schemas",
    "subsample",
    "token_f1",
    "transcript_key",
]
