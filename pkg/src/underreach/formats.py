"""JSON set files, metrics CSV and atomic file output."""
import csv
import io
import json
import os
import tempfile

from underreach.zonotope import Zonotope

METRICS_COLUMNS = ["i", "t", "gen_count", "kappa", "eta", "lambda_min", "wall_ms"]


def atomic_write_text(path, text):
    """Write via a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(x):
    return format(float(x), ".17g")


def _vec(v):
    return "[" + ", ".join(_num(x) for x in v) + "]"


def zonotope_json(Z, extra=None):
    """Zonotope as a JSON object string; numbers carry 17 significant digits."""
    parts = []
    for key, val in (extra or {}).items():
        parts.append(f"{json.dumps(key)}: {json.dumps(val) if not isinstance(val, float) else _num(val)}")
    parts.append(f'"center": {_vec(Z.center)}')
    rows = ", ".join(_vec(row) for row in Z.generators)
    parts.append(f'"generators": [{rows}]')
    return "{" + ", ".join(parts) + "}"


def sets_json(zonotopes, times=None, meta=None):
    """Document ``{..meta, "sets": [{"i", "t", "center", "generators"}, ...]}``."""
    head = []
    for key, val in (meta or {}).items():
        head.append(f"{json.dumps(key)}: {_num(val) if isinstance(val, float) else json.dumps(val)}")
    items = []
    for i, Z in enumerate(zonotopes):
        extra = {"i": i}
        if times is not None:
            extra["t"] = float(times[i])
        items.append("    " + zonotope_json(Z, extra))
    body = ",\n".join(items)
    head.append(f'"sets": [\n{body}\n  ]' if items else '"sets": []')
    return "{\n  " + ",\n  ".join(head) + "\n}\n"


def parse_zonotope(obj, n=None, where="zonotope"):
    """Zonotope from ``{"center": [...], "generators": [[row], ...]}``.

    Raises:
        ValueError: on unknown keys, ragged rows or wrong dimensions.
    """
    if not isinstance(obj, dict):
        raise ValueError(f"{where}: expected an object with center/generators")
    unknown = set(obj) - {"center", "generators", "i", "t"}
    if unknown:
        raise ValueError(f"{where}: unknown keys {sorted(unknown)}")
    if "center" not in obj:
        raise ValueError(f"{where}: missing center")
    c = obj["center"]
    if not isinstance(c, list) or not c or not all(isinstance(x, (int, float)) for x in c):
        raise ValueError(f"{where}: center must be a non-empty list of numbers")
    if n is not None and len(c) != n:
        raise ValueError(f"{where}: center has length {len(c)}, expected {n}")
    rows = obj.get("generators", [])
    if not isinstance(rows, list):
        raise ValueError(f"{where}: generators must be a list of rows")
    if not rows:
        return Zonotope(c)
    if len(rows) != len(c):
        raise ValueError(f"{where}: generators need {len(c)} rows, got {len(rows)}")
    widths = {len(r) if isinstance(r, list) else -1 for r in rows}
    if len(widths) != 1 or -1 in widths:
        raise ValueError(f"{where}: generator rows must be lists of equal length")
    if widths == {0}:
        return Zonotope(c)
    return Zonotope(c, rows)


def load_sets(path):
    """Zonotopes and their metadata from a ``sets_json`` document."""
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or not isinstance(doc.get("sets"), list):
        raise ValueError(f"{path}: expected an object with a 'sets' list")
    sets = [parse_zonotope(obj, where=f"sets[{k}]") for k, obj in enumerate(doc["sets"])]
    return sets, doc


def metrics_rows(result):
    rows = []
    for d in result.diagnostics:
        rows.append({
            "i": d.i,
            "t": d.i * result.tau,
            "gen_count": result.gen_count(d.i),
            "kappa": d.kappa,
            "eta": d.eta,
            "lambda_min": d.lambda_min,
            "wall_ms": d.wall_ms,
        })
    return rows


def metrics_csv(rows, with_gap=False):
    cols = METRICS_COLUMNS + (["gap"] if with_gap else [])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow(["" if row.get(c) is None else row[c] for c in cols])
    return buf.getvalue()
