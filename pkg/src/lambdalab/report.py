"""Report assembly and validation for the verification CLI.

A report is a JSON document with a versioned envelope: schema_version,
the command that produced it, a full parameter echo, package and git
provenance, an optional mesh summary (content hash plus sizes), the
command's results, and an overall pass flag.  Serialization is
canonical -- sorted keys, two-space indent, UTF-8, LF -- so a fixed
configuration and seed give byte-identical files; the timestamp is
optional for exactly that reason.

Every supported schema version ships as a JSON file in docs/ and is
mirrored here so validation needs no repository checkout.
``report_schema_validate`` negotiates the version from the document
itself and reports violations with JSON-pointer locations.
"""

from __future__ import annotations

import json
import math
import subprocess
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import jsonschema
import numpy as np

SCHEMA_VERSION = "1.1.0"

_FALLBACK_VERSION = "0.1.0"


class ReportError(ValueError):
    """Raised for malformed reports or unusable report files."""


# -- schemas ---------------------------------------------------------------

_MESH_BLOCK = {
    "type": "object",
    "required": ["content_hash", "n_vertices", "n_faces"],
    "additionalProperties": False,
    "properties": {
        "content_hash": {"type": "string", "pattern": "^[0-9a-f]{16}$"},
        "n_vertices": {"type": "integer", "minimum": 1},
        "n_faces": {"type": "integer", "minimum": 1},
    },
}


def _envelope(version, extra_properties):
    properties = {
        "schema_version": {"const": version},
        "command": {"type": "string", "minLength": 1},
        "generated_at": {"type": "string"},
        "package_version": {"type": "string"},
        "git_revision": {"type": "string"},
        "parameters": {"type": "object"},
        "results": {"type": ["object", "array"]},
        "passed": {"type": "boolean"},
    }
    properties.update(extra_properties)
    return {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "title": f"verification report v{version}",
        "type": "object",
        "required": ["schema_version", "command", "package_version",
                     "git_revision", "parameters", "results", "passed"],
        "additionalProperties": False,
        "properties": properties,
    }


# 1.0.0 predates the mesh summary block; 1.1.0 adds it as an optional
# member.  Old reports therefore stay valid under their own schema.
SCHEMAS = {
    "1.0.0": _envelope("1.0.0", {}),
    "1.1.0": _envelope("1.1.0", {"mesh": _MESH_BLOCK}),
}

COMPATIBLE_VERSIONS = tuple(sorted(SCHEMAS))


def dump_schemas(directory):
    """Write one canonical schema file per supported version.

    Used to (re)generate the copies in docs/; a test pins the shipped
    files to these dictionaries so the two cannot drift.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for version, schema in sorted(SCHEMAS.items()):
        path = directory / f"report-schema-{version}.json"
        path.write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8", newline="\n")
        written.append(path)
    return written


# -- provenance ------------------------------------------------------------

_GIT_REVISION = None


def git_revision():
    """Commit hash of the tree this package runs from, or "unknown"."""
    global _GIT_REVISION
    if _GIT_REVISION is None:
        try:
            proc = subprocess.run(
                ["git", "rev-parse", "HEAD"],
                cwd=Path(__file__).resolve().parent,
                capture_output=True, text=True, timeout=10.0, check=True)
            _GIT_REVISION = proc.stdout.strip() or "unknown"
        except Exception:
            _GIT_REVISION = "unknown"
    return _GIT_REVISION


def package_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return _FALLBACK_VERSION


# -- assembly --------------------------------------------------------------

def jsonable(obj):
    """Recursively coerce numpy containers and scalars to JSON types.

    Non-finite floats become null: the canonical serializer forbids the
    NaN/Infinity literals, which are not JSON.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        return val if math.isfinite(val) else None
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if hasattr(obj, "__fspath__"):
        return str(obj)
    raise ReportError(f"cannot serialize {type(obj).__name__} into a report")


def mesh_summary(mesh):
    return {"content_hash": mesh.content_hash(),
            "n_vertices": int(mesh.n_vertices),
            "n_faces": int(mesh.n_faces)}


def build_report(command, parameters, results, passed, mesh=None,
                 timestamp=True):
    """Assemble and self-validate one report document."""
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": str(command),
        "package_version": package_version(),
        "git_revision": git_revision(),
        "parameters": jsonable(dict(parameters)),
        "results": jsonable(results),
        "passed": bool(passed),
    }
    if mesh is not None:
        report["mesh"] = mesh_summary(mesh)
    if timestamp:
        report["generated_at"] = datetime.now(timezone.utc).isoformat()
    errors = validate_report(report)
    if errors:
        raise ReportError("assembled report violates its own schema: "
                          + "; ".join(f"{e['pointer']}: {e['message']}"
                                      for e in errors))
    return report


def canonical_json(report):
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False,
                      allow_nan=False) + "\n"


def write_report(report, path):
    path = Path(path)
    path.write_text(canonical_json(report), encoding="utf-8", newline="\n")
    return path


# -- validation ------------------------------------------------------------

def _pointer(error):
    return "/" + "/".join(str(p) for p in error.absolute_path) \
        if error.absolute_path else ""


def validate_report(document):
    """Schema violations as [{pointer, message}, ...]; empty means valid.

    The schema version is negotiated from the document: any version in
    COMPATIBLE_VERSIONS validates against its own schema, anything else
    is itself a violation at /schema_version.
    """
    if not isinstance(document, dict):
        return [{"pointer": "", "message": "report must be a JSON object"}]
    version = document.get("schema_version")
    if version not in SCHEMAS:
        supported = ", ".join(COMPATIBLE_VERSIONS)
        return [{"pointer": "/schema_version",
                 "message": f"unsupported schema_version {version!r} "
                            f"(supported: {supported})"}]
    validator = jsonschema.Draft7Validator(SCHEMAS[version])
    return [{"pointer": _pointer(err), "message": err.message}
            for err in sorted(validator.iter_errors(document),
                              key=_pointer)]


def report_schema_validate(path):
    """Validate a report file on disk.

    Returns {"valid", "schema_version", "errors"}; a file that is not
    JSON at all is reported as a root-level violation rather than an
    exception, so batch validation can keep going.  A missing file is a
    caller error and raises.
    """
    path = Path(path)
    if not path.is_file():
        raise ReportError(f"no such report file: {path}")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        return {"valid": False, "schema_version": None,
                "errors": [{"pointer": "",
                            "message": f"not valid JSON: {exc}"}]}
    errors = validate_report(document)
    version = document.get("schema_version") if isinstance(document, dict) \
        else None
    return {"valid": not errors,
            "schema_version": version if isinstance(version, str) else None,
            "errors": errors}
