"""Bundled example data."""

from __future__ import annotations

import os
from pathlib import Path

DATA_DIR = Path(__file__).parent / "data"


def football_path() -> Path:
    """Location of the American College football network (GML).

    ``$ROBIN_FOOTBALL_GML`` overrides the bundled copy.
    """
    override = os.environ.get("ROBIN_FOOTBALL_GML")
    path = Path(override) if override else DATA_DIR / "football.gml"
    if not path.is_file():
        raise FileNotFoundError(
            f"football network not found at {path}; download football.gml from "
            "http://www-personal.umich.edu/~mejn/netdata/ and place it there "
            "(or point ROBIN_FOOTBALL_GML at it)"
        )
    return path
