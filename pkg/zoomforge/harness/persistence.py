import csv
import hashlib
import io
import math
import typing
from pathlib import Path

import numpy as np
import orjson
import pydantic
from loguru import logger

import zoomforge
from zoomforge.estimators.trajectory import RECORD_FIELDS, STATE_FIELDS, STEP_FIELDS, Trajectory, TrajectorySet
from zoomforge.shared.errors import ArtifactIOError, ReportError
from zoomforge.shared.models.reports import RunManifest

JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_INDENT_2 | orjson.OPT_APPEND_NEWLINE
LINE_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_APPEND_NEWLINE


def _plain(value):
    """JSON-safe value; pydantic models are dumped, non-finite floats become strings."""
    if isinstance(value, pydantic.BaseModel):
        return _plain(value.model_dump(mode="python"))
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class RunWriter:
    """
    Writes the artifacts of one run directory and remembers their digests.
    Nothing written carries a timestamp, so equal configs give equal bytes.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.digests: dict[str, str] = dict()
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as err:
            raise ArtifactIOError(f"Cannot create run directory {self.root}: {err}") from err

    def _write(self, name: str, data: bytes) -> Path:
        path = self.root / name
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        except OSError as err:
            raise ArtifactIOError(f"Cannot write {path}: {err}") from err
        self.digests[name] = hashlib.sha256(data).hexdigest()
        logger.debug(f"wrote {path}")
        return path

    def write_json(self, name: str, data) -> Path:
        return self._write(name, orjson.dumps(_plain(data), option=JSON_OPTIONS))

    def write_text(self, name: str, text: str) -> Path:
        return self._write(name, text.encode("utf-8"))

    def write_csv(self, name: str, header: typing.Sequence[str], rows: typing.Iterable[typing.Sequence]) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
        return self.write_text(name, buffer.getvalue())

    def write_rows(self, name: str, rows: list[typing.NamedTuple], header: typing.Sequence[str] | None = None) -> Path:
        """CSV from NamedTuple rows; the header is the tuple's field names."""
        if header is None:
            header = rows[0]._fields if rows else ()
        return self.write_csv(name, header, rows)

    def write_jsonl(self, name: str, records: typing.Iterable[dict]) -> Path:
        return self._write(name, b"".join(orjson.dumps(_plain(r), option=LINE_OPTIONS) for r in records))

    def write_trajectories(self, trajectories: TrajectorySet, folder: str = "trajectories") -> list[str]:
        trajectories.require(*RECORD_FIELDS)
        names = []
        for i, trajectory in enumerate(trajectories):
            name = f"{folder}/rep-{i:04d}.jsonl"
            self.write_jsonl(name, trajectory_records(trajectory))
            names.append(name)
        return names

    def write_manifest(self, config_hash: str, name: str, seeds: list[int], warnings: list[str]) -> RunManifest:
        manifest = RunManifest(
            config_hash=config_hash,
            name=name,
            seeds=list(seeds),
            artifacts=sorted(self.digests),
            digests=dict(sorted(self.digests.items())),
            version=zoomforge.__version__,
            warnings=list(warnings),
        )
        data = orjson.dumps(manifest.model_dump(mode="json"), option=JSON_OPTIONS)
        try:
            (self.root / "manifest.json").write_bytes(data)
        except OSError as err:
            raise ArtifactIOError(f"Cannot write {self.root / 'manifest.json'}: {err}") from err
        return manifest


def trajectory_records(trajectory: Trajectory) -> typing.Iterator[dict]:
    """One record per step t = 0..T; the step fields are null on the last line."""
    horizon = trajectory.horizon
    for t in range(horizon + 1):
        record = {"t": t, "seed": trajectory.seed}
        for name in STATE_FIELDS:
            record[name] = getattr(trajectory, name)[t]
        for name in STEP_FIELDS:
            record[name] = getattr(trajectory, name)[t] if t < horizon else None
        yield record


def read_trajectory(path: str | Path, config_hash: str = "") -> Trajectory:
    path = Path(path)
    try:
        lines = path.read_bytes().splitlines()
    except OSError as err:
        raise ArtifactIOError(f"Cannot read {path}: {err}") from err
    try:
        records = [orjson.loads(line) for line in lines if line.strip()]
    except orjson.JSONDecodeError as err:
        raise ReportError(f"{path} is not valid JSON lines: {err}", [str(path)]) from err
    if not records:
        raise ReportError(f"{path} is empty.", [str(path)])

    def column(name, dtype, rows):
        return np.asarray([_restore(r[name]) for r in rows], dtype=dtype)

    steps = records[:-1]
    return Trajectory(
        x=column("x", float, records),
        u=column("u", float, steps).reshape(len(steps), -1),
        q=column("q", np.int64, steps),
        qprime=column("qprime", np.int64, steps),
        overflow=column("overflow", bool, steps),
        erased=column("erased", bool, steps),
        exponent=column("exponent", np.int64, records),
        decoder_exponent=column("decoder_exponent", np.int64, records),
        delta=column("delta", float, records),
        seed=int(records[0]["seed"]),
        config_hash=config_hash,
    )


def _restore(value):
    if isinstance(value, str):
        return float(value)
    if isinstance(value, list):
        return [_restore(v) for v in value]
    return value


def read_json(path: str | Path) -> typing.Any:
    path = Path(path)
    try:
        return orjson.loads(path.read_bytes())
    except OSError as err:
        raise ArtifactIOError(f"Cannot read {path}: {err}") from err
    except orjson.JSONDecodeError as err:
        raise ReportError(f"{path.name} is not valid JSON: {err}", [path.name]) from err


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Header and rows; every row must be as wide as the header."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ArtifactIOError(f"Cannot read {path}: {err}") from err
    except UnicodeDecodeError as err:
        raise ReportError(f"{path.name} is not UTF-8 text.", [path.name]) from err
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not rows[0]:
        raise ReportError(f"{path.name} has no header row.", [path.name])
    header, body = rows[0], rows[1:]
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ReportError(
                f"{path.name} line {i} has {len(row)} fields, expected {len(header)}.", [path.name]
            )
    return header, body


def read_manifest(root: str | Path) -> RunManifest:
    path = Path(root) / "manifest.json"
    if not path.exists():
        raise ReportError(f"No manifest.json in {root}.", ["manifest.json"])
    try:
        return RunManifest.model_validate(read_json(path))
    except pydantic.ValidationError as err:
        raise ReportError(f"manifest.json is malformed: {err}", ["manifest.json"]) from err


def verify_artifacts(root: str | Path, manifest: RunManifest) -> tuple[list[str], list[str]]:
    """(missing, corrupted) artifact names, checked against the manifest digests."""
    root = Path(root)
    missing, corrupted = [], []
    for name in manifest.artifacts:
        path = root / name
        if not path.exists():
            missing.append(name)
        elif (digest := manifest.digests.get(name)) and sha256_file(path) != digest:
            corrupted.append(name)
    return missing, corrupted
