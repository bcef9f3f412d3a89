"""Size caps, overridable through the ``COARSEGEOM_CAPS`` environment variable.

The variable holds either a JSON object (``{"median_validation": 500}``) or a
comma-separated ``key=value`` list (``median_validation=500,delta_points=80``).
"""

from __future__ import annotations

import json
import os

from coarsegeom.errors import CapExceeded, ValidationError

DEFAULT_CAPS: dict[str, int] = {
    "median_validation": 2000,
    "fixture_vertices": 5000,
    "dl_vertices": 2000,
    "delta_points": 1000,
    "median_defect_points": 250,
    "ruler_points": 2000,
    "completion_nodes": 5000,
    "tree_width": 4096,
    "tree_depth": 64,
}

ENV_VAR = "COARSEGEOM_CAPS"


def _parse(raw: str) -> dict[str, int]:
    raw = raw.strip()
    if not raw:
        return {}
    if raw.startswith("{"):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValidationError("bad-caps", f"{ENV_VAR} is not valid JSON: {exc}") from exc
        items = data.items()
    else:
        items = []
        for part in raw.split(","):
            if "=" not in part:
                raise ValidationError("bad-caps", f"{ENV_VAR} entry {part!r} lacks '='")
            key, value = part.split("=", 1)
            items.append((key.strip(), value.strip()))
    out: dict[str, int] = {}
    for key, value in items:
        if key not in DEFAULT_CAPS:
            raise ValidationError("bad-caps", f"unknown cap {key!r}", sorted(DEFAULT_CAPS))
        try:
            out[key] = int(value)
        except (TypeError, ValueError) as exc:
            raise ValidationError("bad-caps", f"cap {key!r} must be an integer") from exc
    return out


def get_caps() -> dict[str, int]:
    """Return the effective caps (defaults updated by the environment)."""
    caps = dict(DEFAULT_CAPS)
    caps.update(_parse(os.environ.get(ENV_VAR, "")))
    return caps


def cap(name: str) -> int:
    return get_caps()[name]


def enforce(name: str, actual: int) -> None:
    """Raise :class:`CapExceeded` when ``actual`` is above the cap ``name``."""
    limit = cap(name)
    if actual > limit:
        raise CapExceeded(name, limit, actual)
