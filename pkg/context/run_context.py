# context/run_context.py
"""
Run metadata embedded in every JSON summary.
"""

import datetime as dt
import hashlib
import json
import platform
import uuid
from typing import Any, Dict, Mapping

import numpy as np
import scipy


def config_digest(config: Mapping[str, Any]) -> str:
    canonical = json.dumps(dict(config), sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


def build(command: str, config: Mapping[str, Any], seed: int | None = None) -> Dict[str, Any]:
    digest = config_digest(config)
    return {
        "generated_at": dt.datetime.now(dt.timezone.utc).isoformat(),
        "command": command,
        "run_id": f"{command}-{digest[:12]}-{uuid.uuid4().hex[:8]}",
        "config_digest": digest,
        "seed": seed,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
