"""CSV loading and schema validation for sweep outputs.

Every sweep CSV starts with a fixed header row per experiment type.
A plot kind declares the columns it needs; missing columns are a hard
error, never a silent reinterpretation of whatever happens to parse.
"""

import csv


class SchemaError(Exception):
    """Input rows do not match the plot kind's expected columns."""


def _coerce(value):
    if value == "":
        return None
    try:
        return float(value)
    except ValueError:
        return value


def load_rows(paths, required):
    """Read one or more sweep CSVs and concatenate their usable rows.

    Each file must carry every required column in its header. Rows
    whose status is not "ok" are dropped (failed cells carry no
    estimates). Numeric fields are coerced to float, empty fields to
    None. Raises SchemaError on a missing column or when no usable
    row remains.
    """
    rows = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in required if c not in header]
            if missing:
                raise SchemaError(
                    "{}: missing required columns {} (header: {})".format(
                        path, ", ".join(missing), ", ".join(header)))
            for raw in reader:
                if raw.get("status", "ok") != "ok":
                    continue
                rows.append({k: _coerce(v) for k, v in raw.items()})
    if not rows:
        raise SchemaError("no usable data rows in {}".format(", ".join(paths)))
    return rows
