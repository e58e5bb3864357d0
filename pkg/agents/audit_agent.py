# agents/audit_agent.py

from __future__ import annotations

import json
import logging
import os
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from google.cloud import bigquery, storage

from agents.base_agent import BaseAgent, jsonable

log = logging.getLogger(__name__)

# --- Configuration (environment; unset means local-only) ---
ENV_BQ_PROJECT = "EQC_BQ_PROJECT"
ENV_BQ_DATASET = "EQC_BQ_DATASET"
ENV_BQ_TABLE = "EQC_BQ_TABLE"
ENV_GCS_BUCKET = "EQC_GCS_BUCKET"
DEFAULT_DATASET = "eqc_tsp"
DEFAULT_TABLE = "training_runs"
INIT_TIMEOUT = 10.0

# --- BigQuery client (initialised once per process, in the background) ---
_bigquery_client: bigquery.Client | None = None
_bigquery_ready = threading.Event()
_bigquery_lock = threading.Lock()
_bigquery_started = False


def _initialize_bigquery_client(project: str, dataset: str) -> None:
    global _bigquery_client
    try:
        client = bigquery.Client(project=project)
        client.get_dataset(f"{project}.{dataset}")
        _bigquery_client = client
        log.info("BigQuery audit client ready for %s.%s", project, dataset)
    except Exception as exc:
        log.warning("BigQuery audit client unavailable: %s", exc)
    finally:
        _bigquery_ready.set()


def _setup_bigquery(project: str, dataset: str) -> None:
    global _bigquery_started
    with _bigquery_lock:
        if _bigquery_started:
            return
        _bigquery_started = True
    threading.Thread(target=_initialize_bigquery_client, args=(project, dataset), daemon=True).start()


class AuditAgent(BaseAgent):
    """Records a summary row per training run in BigQuery and archives run artifacts in GCS."""

    def __init__(self, project: Optional[str] = None, dataset: Optional[str] = None,
                 table: Optional[str] = None, bucket: Optional[str] = None):
        super().__init__("AuditAgent")
        self.project = project if project is not None else os.getenv(ENV_BQ_PROJECT, "")
        self.dataset = dataset or os.getenv(ENV_BQ_DATASET, DEFAULT_DATASET)
        self.table = table or os.getenv(ENV_BQ_TABLE, DEFAULT_TABLE)
        self.bucket = bucket if bucket is not None else os.getenv(ENV_GCS_BUCKET, "")
        self._threads: list[threading.Thread] = []
        if self.project:
            _setup_bigquery(self.project, self.dataset)

    @staticmethod
    def build_row(summary: Dict[str, Any]) -> Dict[str, Any]:
        validation = summary.get("validation") or {}
        return {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "run_id": summary.get("run", {}).get("run_id"),
            "ansatz": summary.get("ansatz"),
            "depth": summary.get("depth"),
            "n_qubits": summary.get("n_qubits"),
            "n_trainable": summary.get("n_trainable"),
            "episodes": summary.get("episodes"),
            "solved": bool(summary.get("solved", False)),
            "validation_mean": validation.get("mean"),
            "summary_json": json.dumps(jsonable(summary), sort_keys=True),
        }

    def log_event(self, summary: Dict[str, Any], artifacts: Iterable[str | Path] = ()) -> Dict[str, Any]:
        """Dispatch audit writes on daemon threads; returns what was attempted."""
        attempted = {"bigquery": False, "gcs": False}
        if self.project:
            row = self.build_row(summary)
            self._spawn(self._write_to_bq, row)
            attempted["bigquery"] = True
        else:
            self.log.debug("No %s set; skipping BigQuery audit row", ENV_BQ_PROJECT)
        if self.bucket:
            run_id = summary.get("run", {}).get("run_id", "run")
            self._spawn(self._upload, run_id, [Path(a) for a in artifacts])
            attempted["gcs"] = True
        else:
            self.log.debug("No %s set; skipping artifact upload", ENV_GCS_BUCKET)
        return attempted

    def run(self, summary: Dict[str, Any], artifacts: Iterable[str | Path] = ()) -> Dict[str, Any]:
        return self.log_event(summary, artifacts)

    def flush(self, timeout: float = 30.0) -> None:
        for t in self._threads:
            t.join(timeout)
        self._threads.clear()

    def _spawn(self, target, *args) -> None:
        t = threading.Thread(target=target, args=args, daemon=True)
        t.start()
        self._threads.append(t)

    def _write_to_bq(self, row: Dict[str, Any]) -> None:
        if not _bigquery_ready.wait(timeout=INIT_TIMEOUT) or _bigquery_client is None:
            self.log.warning("BigQuery write skipped: client not initialised")
            return
        try:
            errors = _bigquery_client.insert_rows_json(f"{self.project}.{self.dataset}.{self.table}", [row])
            if errors:
                self.log.warning("BigQuery insert errors: %s", errors)
            else:
                self.log.info("Audit row written for run %s", row.get("run_id"))
        except Exception as exc:
            self.log.warning("BigQuery write failed: %s", exc)

    def _upload(self, run_id: str, paths: list[Path]) -> None:
        try:
            bucket = storage.Client().bucket(self.bucket)
            for path in paths:
                bucket.blob(f"{run_id}/{path.name}").upload_from_filename(str(path))
            self.log.info("Uploaded %d artifacts to gs://%s/%s/", len(paths), self.bucket, run_id)
        except Exception as exc:
            self.log.warning("GCS upload failed: %s", exc)
