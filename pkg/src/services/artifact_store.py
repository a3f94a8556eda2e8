"""
Local filesystem artifact store: matrices, projector sets, records and reports
"""
import csv
import io
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ValidationError

from config.logging import get_logger
from config.settings import settings

from ..models.data_models import (
    ClusterProjector, DenseMatrix, ProjectorSet, ReplicateBatch, ReplicateRecord
)
from ..models.exceptions import ArtifactIoError, ConfigurationError
from ..models.schemas import ExperimentConfig

logger = get_logger("artifacts")

PathLike = Union[str, Path]

RECORD_COLUMNS = [
    "index", "norm_gamma", "in_regime", "cluster_localized", "max_shift", "weyl_ok",
    "projector_deviation", "linear_norm", "remainder_norm", "projector_bound_ok",
    "remainder_bound_ok", "overlap", "b_tilde", "floor_active", "naive_alignment_error",
    "debiased_alignment_error", "rho", "linf_error", "linf_u", "linf_v",
]
BOOLEAN_COLUMNS = {
    "in_regime", "cluster_localized", "weyl_ok", "projector_bound_ok",
    "remainder_bound_ok", "floor_active",
}
BILINEAR_PREFIX = "bilinear:"
FORM_PREFIX = "form:"
CONFIG_MARKER = " config="
MANIFEST_NAME = "manifest.json"


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _parse_value(column: str, text: str) -> Any:
    if text == "":
        return None
    if column in BOOLEAN_COLUMNS:
        if text not in ("true", "false"):
            raise ValueError(f"expected true/false in column {column}, got {text!r}")
        return text == "true"
    if column == "index":
        return int(text)
    return float(text)


class LocalArtifactStore:
    """Reads and writes experiment artifacts under a root directory"""

    def __init__(self, root: Optional[PathLike] = None):
        self.root = Path(root) if root is not None else Path.cwd()

    def _resolve(self, path: PathLike) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.root / path

    def _write_text(self, path: PathLike, content: str) -> Path:
        target = self._resolve(path)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(content, encoding="utf-8")
        except OSError as e:
            raise ArtifactIoError(f"Failed to write {target}: {e}", {"path": str(target)})
        return target

    def _read_text(self, path: PathLike) -> str:
        target = self._resolve(path)
        try:
            return target.read_text(encoding="utf-8")
        except OSError as e:
            raise ArtifactIoError(f"Failed to read {target}: {e}", {"path": str(target)})

    # Matrices

    def save_matrix(self, path: PathLike, matrix: DenseMatrix) -> Path:
        """CSV with a "rows,cols" header and row-major entries at 17 significant digits"""
        data = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        buffer = io.StringIO()
        buffer.write(f"{data.shape[0]},{data.shape[1]}\n")
        if data.size:
            np.savetxt(buffer, data, fmt="%.17g", delimiter=",")
        return self._write_text(path, buffer.getvalue())

    def load_matrix(self, path: PathLike) -> DenseMatrix:
        content = self._read_text(path)
        lines = content.splitlines()
        try:
            rows, cols = (int(part) for part in lines[0].split(","))
            body = [line for line in lines[1:] if line.strip()]
            if rows * cols == 0:
                data = np.zeros((rows, cols))
            else:
                data = np.loadtxt(body, delimiter=",", dtype=np.float64, ndmin=2)
        except (IndexError, ValueError) as e:
            raise ArtifactIoError(f"Malformed matrix file {path}: {e}", {"path": str(path)})
        if data.shape != (rows, cols):
            raise ArtifactIoError(
                "Matrix body does not match its header",
                {"path": str(path), "header": [rows, cols], "body": list(data.shape)}
            )
        return data

    # Projector sets

    def save_projector_set(self, directory: PathLike, projectors: ProjectorSet) -> Path:
        """Directory of singular vector CSVs plus a JSON manifest"""
        target = self._resolve(directory)
        manifest: Dict[str, Any] = {
            "m": projectors.m,
            "n": projectors.n,
            "zero_multiplicity": projectors.zero_multiplicity,
            "clusters": [],
        }
        for cluster in projectors.clusters:
            left_name = f"left_{cluster.k}.csv"
            right_name = f"right_{cluster.k}.csv"
            self.save_matrix(target / left_name, cluster.left)
            self.save_matrix(target / right_name, cluster.right)
            manifest["clusters"].append({
                "k": cluster.k,
                "multiplicity": cluster.multiplicity,
                "mu": cluster.mu,
                "gap": cluster.gap,
                "left": left_name,
                "right": right_name,
            })
        self.write_json(target / MANIFEST_NAME, manifest)
        logger.info("Saved projector set", directory=str(target), clusters=projectors.cluster_count)
        return target

    def load_projector_set(self, directory: PathLike) -> ProjectorSet:
        target = self._resolve(directory)
        manifest = self.read_json(target / MANIFEST_NAME)
        try:
            clusters = [
                ClusterProjector(
                    k=int(entry["k"]),
                    mu=float(entry["mu"]),
                    gap=float(entry["gap"]),
                    left=self.load_matrix(target / entry["left"]),
                    right=self.load_matrix(target / entry["right"]),
                )
                for entry in manifest["clusters"]
            ]
            return ProjectorSet(
                m=int(manifest["m"]),
                n=int(manifest["n"]),
                clusters=clusters,
                zero_multiplicity=int(manifest["zero_multiplicity"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ArtifactIoError(f"Malformed projector manifest: {e}", {"directory": str(target)})

    # JSON

    def write_json(self, path: PathLike, payload: Union[BaseModel, Dict[str, Any], List[Any]]) -> Path:
        if isinstance(payload, BaseModel):
            text = payload.model_dump_json(indent=2)
        else:
            text = json.dumps(payload, indent=2, default=str)
        return self._write_text(path, text + "\n")

    def read_json(self, path: PathLike) -> Any:
        try:
            return json.loads(self._read_text(path))
        except json.JSONDecodeError as e:
            raise ArtifactIoError(f"Malformed JSON in {path}: {e}", {"path": str(path)})

    def load_experiment_config(self, path: PathLike) -> ExperimentConfig:
        """ExperimentConfig from a JSON file (YAML accepted for .yaml/.yml)"""
        target = self._resolve(path)
        text = self._read_text(target)
        try:
            if target.suffix.lower() in (".yaml", ".yml"):
                data = yaml.safe_load(text)
            else:
                data = json.loads(text)
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            raise ConfigurationError(f"Config file is not valid: {e}", {"path": str(target)})
        try:
            return ExperimentConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(
                "Experiment configuration failed validation",
                {"path": str(target), "errors": json.loads(e.json())}
            )

    # Records

    @staticmethod
    def record_header(probe_labels: List[str], form_labels: List[str]) -> List[str]:
        return (
            RECORD_COLUMNS
            + [BILINEAR_PREFIX + label for label in probe_labels]
            + [FORM_PREFIX + label for label in form_labels]
        )

    def records_to_csv(self, batch: ReplicateBatch, config: ExperimentConfig) -> str:
        """Comment line with version and config echo, header row, one row per record"""
        buffer = io.StringIO()
        buffer.write(f"# {settings.version_string}{CONFIG_MARKER}{config.model_dump_json()}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.record_header(batch.probe_labels, batch.form_labels))
        for record in batch.records:
            row = [_format_value(getattr(record, column)) for column in RECORD_COLUMNS]
            row.extend(_format_value(v) for v in record.bilinear)
            row.extend(_format_value(v) for v in record.linear_forms)
            writer.writerow(row)
        return buffer.getvalue()

    def write_records(self, path: PathLike, batch: ReplicateBatch, config: ExperimentConfig) -> Path:
        target = self._write_text(path, self.records_to_csv(batch, config))
        logger.info("Wrote records", path=str(target), records=len(batch.records))
        return target

    def parse_records(self, path: PathLike) -> Tuple[ExperimentConfig, ReplicateBatch]:
        """Inverse of write_records; the bases are not part of the file"""
        lines = self._read_text(path).splitlines()
        if not lines or not lines[0].startswith("#") or CONFIG_MARKER not in lines[0]:
            raise ArtifactIoError("Records file lacks the config echo line", {"path": str(path)})
        try:
            config = ExperimentConfig.model_validate_json(lines[0].split(CONFIG_MARKER, 1)[1])
        except ValidationError as e:
            raise ArtifactIoError(f"Config echo failed validation: {e}", {"path": str(path)})

        reader = csv.reader(lines[1:])
        try:
            header = next(reader)
        except StopIteration:
            raise ArtifactIoError("Records file lacks a header row", {"path": str(path)})
        if header[:len(RECORD_COLUMNS)] != RECORD_COLUMNS:
            raise ArtifactIoError("Unexpected records header", {"path": str(path)})
        extra = header[len(RECORD_COLUMNS):]
        probe_labels = [c[len(BILINEAR_PREFIX):] for c in extra if c.startswith(BILINEAR_PREFIX)]
        form_labels = [c[len(FORM_PREFIX):] for c in extra if c.startswith(FORM_PREFIX)]
        if len(probe_labels) + len(form_labels) != len(extra):
            raise ArtifactIoError("Unknown columns in records header", {"path": str(path)})

        records = []
        for line_number, row in enumerate(reader, start=3):
            if not row:
                continue
            if len(row) != len(header):
                raise ArtifactIoError(
                    "Record row has the wrong number of fields", {"path": str(path), "line": line_number}
                )
            try:
                values = {c: _parse_value(c, t) for c, t in zip(RECORD_COLUMNS, row)}
                tail = [float(t) for t in row[len(RECORD_COLUMNS):]]
            except ValueError as e:
                raise ArtifactIoError(f"Malformed record: {e}", {"path": str(path), "line": line_number})
            records.append(ReplicateRecord(
                bilinear=tail[:len(probe_labels)],
                linear_forms=tail[len(probe_labels):],
                **values,
            ))

        return config, ReplicateBatch(records=records, probe_labels=probe_labels, form_labels=form_labels)

