"""JSON-Manifeste der Pipelinestufen."""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any

from ..errors import DataError
from ..models import StageManifest

logger = logging.getLogger(__name__)


class ManifestJSONRepository:
    """JSON-basierte Repository Implementation für StageManifest."""

    def save(self, manifest: StageManifest, file_path: Path) -> None:
        """Speichert StageManifest als JSON."""
        data = self._to_dict(manifest)

        file_path.parent.mkdir(parents=True, exist_ok=True)
        with open(file_path, "w", encoding="utf-8") as file:
            json.dump(data, file, indent=2, ensure_ascii=False, sort_keys=True, default=str)

    def load(self, file_path: Path) -> StageManifest:
        """Lädt StageManifest aus JSON."""
        if not file_path.exists():
            raise FileNotFoundError(f"Datei nicht gefunden: {file_path}")

        with open(file_path, encoding="utf-8") as file:
            try:
                data = json.load(file)
            except json.JSONDecodeError as err:
                raise DataError(f"{file_path}: kein gültiges JSON ({err})") from err

        return self._from_dict(data)

    def _to_dict(self, manifest: StageManifest) -> dict[str, Any]:
        """Konvertiert StageManifest zu Dictionary."""
        return {
            "stage": manifest.stage,
            "key": manifest.key,
            "inputs": manifest.inputs,
            "params": manifest.params,
            "versions": manifest.versions,
            "outputs": manifest.outputs,
            "created": manifest.created.isoformat() if manifest.created else None,
        }

    def _from_dict(self, data: dict[str, Any]) -> StageManifest:
        """Erstellt StageManifest aus Dictionary."""
        try:
            return StageManifest(
                stage=data["stage"],
                key=data["key"],
                inputs=dict(data.get("inputs", {})),
                params=dict(data.get("params", {})),
                versions=dict(data.get("versions", {})),
                outputs=list(data.get("outputs", [])),
                created=datetime.fromisoformat(data["created"]) if data.get("created") else None,
            )
        except KeyError as err:
            raise DataError(f"Manifest unvollständig, Feld fehlt: {err}") from err
