"""JSONL and artifact I/O: streaming readers, atomic writers, run manifests."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, TextIO, Union

PathLike = Union[str, Path]


class DataError(Exception):
    """Bad input data; carries file/line context for CLI error reporting."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:" if line is None else f"{path}:{line}: "
        super().__init__(f"{where}{message}")


def dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def read_jsonl(path: PathLike) -> Iterator[tuple[int, Any]]:
    """Yield (line_number, parsed_object); raises DataError on bad JSON."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON ({exc.msg})", str(path), lineno) from None


def write_jsonl_atomic(path: PathLike, rows: Iterable[Any]) -> int:
    """Write rows as JSONL via temp file + rename; returns the row count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(dumps(row))
                fh.write("\n")
                count += 1
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return count


def write_json_atomic(path: PathLike, obj: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def sha256_file(path: PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_manifest(
    artifact: PathLike,
    subcommand: str,
    config: dict[str, Any],
    inputs: Iterable[PathLike] = (),
    extra_artifacts: Iterable[PathLike] = (),
) -> Path:
    """Record config and content hashes next to an artifact for repro audits."""
    artifact = Path(artifact)
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "config_hash": sha256_text(json.dumps(config, sort_keys=True, ensure_ascii=False)),
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "artifacts": {str(artifact): sha256_file(artifact),
                      **{str(p): sha256_file(p) for p in extra_artifacts}},
    }
    out = artifact.with_name(artifact.name + ".manifest.json")
    write_json_atomic(out, manifest)
    return out


def open_output(path: Optional[PathLike]) -> TextIO:
    import sys
    if path is None:
        return sys.stdout
    return open(path, "w", encoding="utf-8")
