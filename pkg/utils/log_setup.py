# utils/log_setup.py

from __future__ import annotations

import logging
import os

import google.cloud.logging

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

_configured = False


def _env_flag(name: str) -> bool:
    return os.getenv(name, "").strip().lower() in {"1", "true", "yes", "on"}


def configure_logging(level: str | None = None, cloud: bool | None = None) -> None:
    """Set up root logging once per process.

    ``level`` falls back to ``EQC_LOG_LEVEL`` (default INFO) and ``cloud`` to
    ``EQC_CLOUD_LOGGING``. Cloud logging that cannot be initialised (no
    credentials, no network) is reported and local logging stays in place.
    """
    global _configured
    if _configured:
        return

    level_name = (level or os.getenv("EQC_LOG_LEVEL") or "INFO").upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.INFO), format=LOG_FORMAT)

    use_cloud = _env_flag("EQC_CLOUD_LOGGING") if cloud is None else cloud
    if use_cloud:
        try:
            client = google.cloud.logging.Client()
            client.setup_logging(log_level=getattr(logging, level_name, logging.INFO))
            logging.getLogger(__name__).info("Cloud logging attached for project %s", client.project)
        except Exception as exc:
            logging.getLogger(__name__).warning("Cloud logging unavailable, using local logs: %s", exc)

    _configured = True
