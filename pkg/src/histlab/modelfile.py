"""
JSON model files.

A model file is a JSON object::

    {
      "name": "three-box-A_set",
      "dim": 3,
      "state": [[re, im], ...],
      "hamiltonian": [[[re, im], ...], ...],          optional, default zero
      "families": {
        "A": {"labels": ["A", "~A"], "members": [{"basis": [0]}, {"basis": [1, 2]}]},
        ...
      },
      "schedule": [{"family": "A", "time": 1.0}, {"family": "present", "time": 2.0}],
      "records": {"family": "R", "time": 3.0, "alignment": [[0, 1], null, ...]}
    }

Projector members are ``{"basis": [indices]}``, ``{"vector": [[re, im], ...]}``
(normalized, rank one) or ``{"matrix": [[[re, im], ...], ...]}``. Schedule
and record entries may carry ``"reference_time"``, the time at which the
matrices are the Heisenberg-picture operators. A ``null`` alignment entry
marks a residual record; without ``"alignment"`` record ``i`` is aligned
with the ``i``-th history in lexicographic order.

Syntax and shape problems raise :class:`~histlab.errors.ModelFileError`;
physics problems (non-idempotent members, incomplete families, ...) raise
the library's validation errors.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from histlab.errors import DimensionMismatch, ModelFileError, ValidationError
from histlab.hilbert import (
    DEFAULT_TOLERANCE,
    HermitianOperator,
    Projector,
    ProjectorFamily,
    ToleranceConfig,
    basis_projector,
    make_state,
    projector_onto,
    validate_family,
    validate_hermitian,
    validate_projector,
)
from histlab.histories import ScheduledFamily, build_history_set
from histlab.measures import check_records, make_records
from histlab.models import ModelBundle

__all__ = [
    "load_model",
    "loads_model",
    "parse_model",
    "model_document",
    "dumps_model",
    "save_model",
    "shipped_model",
]


# -- reading ------------------------------------------------------------------


def _need(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise ModelFileError(f"{where}: expected an object")
    if key not in obj:
        raise ModelFileError(f"{where}: missing field {key!r}")
    return obj[key]


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ModelFileError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _complex_vector(raw, where: str) -> np.ndarray:
    if not isinstance(raw, list):
        raise ModelFileError(f"{where}: expected a list of [re, im] pairs")
    out = np.empty(len(raw), dtype=complex)
    for i, pair in enumerate(raw):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ModelFileError(f"{where}[{i}]: expected [re, im], got {pair!r}")
        out[i] = complex(_number(pair[0], where), _number(pair[1], where))
    return out


def _complex_matrix(raw, dim: int, where: str) -> np.ndarray:
    if not isinstance(raw, list):
        raise ModelFileError(f"{where}: expected a list of rows")
    rows = [_complex_vector(r, f"{where}[{i}]") for i, r in enumerate(raw)]
    if len(rows) != dim or any(r.shape[0] != dim for r in rows):
        raise DimensionMismatch(f"{where}: expected a {dim}x{dim} matrix", location=where)
    return np.array(rows, dtype=complex).reshape(dim, dim)


def _member(raw, dim: int, tol: ToleranceConfig, where: str) -> Projector:
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ModelFileError(f"{where}: a member is one of {{basis}}, {{vector}} or {{matrix}}")
    (kind, value), = raw.items()
    if kind == "basis":
        if not isinstance(value, list) or any(isinstance(i, bool) or not isinstance(i, int) for i in value):
            raise ModelFileError(f"{where}: basis must be a list of integers")
        if any(not 0 <= i < dim for i in value):
            raise DimensionMismatch(f"{where}: basis index out of range for dim {dim}", location=where)
        return basis_projector(dim, value)
    if kind == "vector":
        v = _complex_vector(value, where)
        if v.shape[0] != dim:
            raise DimensionMismatch(f"{where}: vector has length {v.shape[0]}, expected {dim}", location=where)
        return projector_onto(make_state(v, tol, normalize=True).amplitudes, tol)
    if kind == "matrix":
        return validate_projector(_complex_matrix(value, dim, where), tol)
    raise ModelFileError(f"{where}: unknown member kind {kind!r}")


def _family(raw, dim: int, tol: ToleranceConfig, name: str) -> ProjectorFamily:
    where = f"families.{name}"
    members_raw = _need(raw, "members", where)
    if not isinstance(members_raw, list):
        raise ModelFileError(f"{where}.members: expected a list")
    labels = raw.get("labels")
    if labels is not None and (
        not isinstance(labels, list) or len(labels) != len(members_raw) or not all(isinstance(x, str) for x in labels)
    ):
        raise ModelFileError(f"{where}.labels: expected one string per member")
    members = []
    for i, m in enumerate(members_raw):
        try:
            members.append(_member(m, dim, tol, f"{where}.members[{i}]"))
        except ValidationError as exc:
            exc.location = exc.location or f"{where}.members[{i}]"
            raise
    try:
        return validate_family(members, tol, labels)
    except ValidationError as exc:
        exc.location = f"{where} {exc.location}" if exc.location is not None else where
        raise


def _optional_time(entry: dict, key: str, where: str):
    if entry.get(key) is None:
        return None
    return _number(entry[key], f"{where}.{key}")


def parse_model(doc, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> ModelBundle:
    """Build a :class:`ModelBundle` (without expectations) from a decoded document."""
    if not isinstance(doc, dict):
        raise ModelFileError("model file must contain a JSON object")
    dim = _need(doc, "dim", "model")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ModelFileError(f"dim must be a positive integer, got {dim!r}")
    amps = _complex_vector(_need(doc, "state", "model"), "state")
    if amps.shape[0] != dim:
        raise DimensionMismatch(f"state has {amps.shape[0]} amplitudes, dim is {dim}", location="state")
    state = make_state(amps, tol)
    if doc.get("hamiltonian") is None:
        H = HermitianOperator.zero(dim)
    else:
        H = validate_hermitian(_complex_matrix(doc["hamiltonian"], dim, "hamiltonian"), tol)

    fam_raw = _need(doc, "families", "model")
    if not isinstance(fam_raw, dict):
        raise ModelFileError("families: expected an object mapping names to families")
    sched_raw = _need(doc, "schedule", "model")
    if not isinstance(sched_raw, list):
        raise ModelFileError("schedule: expected a list")
    rec_raw = doc.get("records")
    used = [_need(e, "family", f"schedule[{k}]") for k, e in enumerate(sched_raw)]
    if rec_raw is not None:
        used.append(_need(rec_raw, "family", "records"))
    for name in used:
        if not isinstance(name, str) or name not in fam_raw:
            raise ModelFileError(f"unknown family {name!r}")
    families = {name: _family(fam_raw[name], dim, tol, name) for name in dict.fromkeys(used)}

    schedule = []
    for k, e in enumerate(sched_raw):
        where = f"schedule[{k}]"
        t = _number(_need(e, "time", where), f"{where}.time")
        schedule.append(ScheduledFamily(families[e["family"]], t, _optional_time(e, "reference_time", where), e["family"]))
    hset = build_history_set(H, schedule, tol)

    records = None
    if rec_raw is not None:
        t_r = _number(_need(rec_raw, "time", "records"), "records.time")
        align = rec_raw.get("alignment")
        fam = families[rec_raw["family"]]
        if align is None:
            if len(fam) != len(hset):
                raise ModelFileError("records: alignment omitted but record and history counts differ")
            align = list(hset.indices)
        elif not isinstance(align, list) or not all(
            a is None or (isinstance(a, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in a))
            for a in align
        ):
            raise ModelFileError("records.alignment: expected a list of integer index lists or null")
        records = make_records(fam, t_r, align, _optional_time(rec_raw, "reference_time", "records"))
        check_records(records, hset)
    name = doc.get("name", "model")
    if not isinstance(name, str):
        raise ModelFileError("name must be a string")
    return ModelBundle(name, state, hset, records, (), {}, tol)


def loads_model(text: str, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> ModelBundle:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"not valid JSON: {exc}") from exc
    return parse_model(doc, tol)


def load_model(path, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> ModelBundle:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ModelFileError(f"cannot read {path}: {exc}") from exc
    return loads_model(text, tol)


# -- writing ------------------------------------------------------------------


def _pair(z) -> list:
    return [float(z.real), float(z.imag)]


def _dense(m: np.ndarray) -> list:
    return [[_pair(z) for z in row] for row in m]


def _member_doc(p: Projector) -> dict:
    m = p.matrix
    diag = np.diag(m)
    off = m - np.diag(diag)
    if not np.any(off) and np.all((diag == 0) | (diag == 1)):
        return {"basis": [int(i) for i in np.flatnonzero(diag == 1)]}
    return {"matrix": _dense(m)}


def _family_doc(f: ProjectorFamily) -> dict:
    return {"labels": list(f.labels), "members": [_member_doc(p) for p in f.members]}


def model_document(bundle: ModelBundle) -> dict:
    """Plain-data form of a bundle. Projectors that are exact 0/1 diagonals are written as basis lists."""
    hset = bundle.set
    families, schedule = {}, []
    owner = {}
    for k, s in enumerate(hset.schedule):
        name = s.name or f"slot{k}"
        if name in owner and owner[name] is not s.family:
            name = f"{name}_{k}"
        owner[name] = s.family
        families.setdefault(name, _family_doc(s.family))
        entry = {"family": name, "time": float(s.time)}
        if s.reference_time is not None:
            entry["reference_time"] = float(s.reference_time)
        schedule.append(entry)
    doc = {"name": bundle.name, "dim": int(hset.dim), "state": [_pair(z) for z in bundle.state.amplitudes]}
    if not hset.hamiltonian.is_zero:
        doc["hamiltonian"] = _dense(hset.hamiltonian.matrix)
    rec = bundle.records
    if rec is not None:
        name = "records"
        while name in families:
            name += "_"
        families[name] = _family_doc(rec.family)
        rdoc = {"family": name, "time": float(rec.record_time)}
        if rec.reference_time is not None:
            rdoc["reference_time"] = float(rec.reference_time)
        rdoc["alignment"] = [None if a is None else list(a) for a in rec.alignment]
    doc["families"] = families
    doc["schedule"] = schedule
    if rec is not None:
        doc["records"] = rdoc
    return doc


def _is_leaf_list(x) -> bool:
    # numbers, [re, im] pairs or plain index lists stay on one line
    return isinstance(x, list) and all(
        not isinstance(v, (list, dict)) or (isinstance(v, list) and all(not isinstance(w, (list, dict)) for w in v))
        for v in x
    )


def _emit(x, indent: int) -> str:
    pad = "  " * indent
    if isinstance(x, float) and not math.isfinite(x):
        raise ModelFileError("non-finite number in model")
    if isinstance(x, dict):
        if all(not isinstance(v, (list, dict)) or _is_leaf_list(v) for v in x.values()):
            return json.dumps(x, ensure_ascii=False, separators=(", ", ": "))
        inner = ",\n".join(f"{pad}  {json.dumps(k, ensure_ascii=False)}: {_emit(v, indent + 1)}" for k, v in x.items())
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(x, list) and x and not _is_leaf_list(x):
        inner = ",\n".join(f"{pad}  {_emit(v, indent + 1)}" for v in x)
        return "[\n" + inner + "\n" + pad + "]"
    return json.dumps(x, ensure_ascii=False, separators=(", ", ": "))


def dumps_model(bundle: ModelBundle) -> str:
    """Deterministic text of :func:`model_document`; export, parse, export is byte-identical."""
    return _emit(model_document(bundle), 0) + "\n"


def save_model(bundle: ModelBundle, path) -> None:
    Path(path).write_text(dumps_model(bundle), encoding="utf-8")


def shipped_model(name: str = "three_box_a.json") -> Path:
    """Path of a model file bundled with the package."""
    return Path(str(resources.files("histlab") / "data" / name))
