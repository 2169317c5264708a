"""
RLE-JSON-Format für Maskensätze.

Eigenes Format::

    {
      "height": 480, "width": 640,
      "overlapping": true,
      "source": "sam",
      "masks": [
        {"size": [480, 640], "counts": [0, 12, 4, ...], "score": 0.97},
        ...
      ]
    }

`counts` ist unkomprimiertes COCO-RLE: spaltenweise Läufe, beginnend mit einem
Lauf von Nullen (ggf. Länge 0). Zusätzlich wird die Liste gelesen, die der
SAM-Maskengenerator mit ``output_mode="uncompressed_rle"`` erzeugt
(``[{"segmentation": {"size": ..., "counts": ...}, "predicted_iou": ...}, ...]``).
"""

import json
import logging
from pathlib import Path
from typing import Any

from ..errors import RleFormatError
from ..models import MaskSet, RleMask

logger = logging.getLogger(__name__)


class MaskJSONRepository:
    """JSON-basierte Repository Implementation für MaskSet."""

    def save(self, masks: MaskSet, file_path: Path) -> None:
        """Speichert MaskSet als RLE-JSON."""
        data = self._to_dict(masks)

        file_path.parent.mkdir(parents=True, exist_ok=True)
        with open(file_path, "w", encoding="utf-8") as file:
            json.dump(data, file, ensure_ascii=False)

    def load(self, file_path: Path) -> MaskSet:
        """Lädt MaskSet aus RLE-JSON."""
        if not file_path.exists():
            raise FileNotFoundError(f"Datei nicht gefunden: {file_path}")

        with open(file_path, encoding="utf-8") as file:
            try:
                data = json.load(file)
            except json.JSONDecodeError as err:
                raise RleFormatError(f"{file_path}: kein gültiges JSON ({err})") from err

        masks = self._from_dict(data, source=file_path.stem)
        logger.debug(f"{len(masks)} Masken aus {file_path.name} geladen")
        return masks

    def _to_dict(self, masks: MaskSet) -> dict[str, Any]:
        """Konvertiert MaskSet zu Dictionary."""
        return {
            "height": masks.height,
            "width": masks.width,
            "overlapping": masks.overlapping,
            "source": masks.source,
            "masks": [
                {
                    "size": [m.height, m.width],
                    "counts": list(m.counts),
                    **({"score": m.score} if m.score is not None else {}),
                }
                for m in masks.masks
            ],
        }

    def _from_dict(self, data: dict[str, Any] | list, source: str = "file") -> MaskSet:
        """Konvertiert Dictionary (oder SAM-Liste) zu MaskSet."""
        if isinstance(data, list):
            entries = [self._sam_entry(item, index) for index, item in enumerate(data)]
            overlapping = True
        elif isinstance(data, dict) and "masks" in data:
            entries = data["masks"]
            overlapping = bool(data.get("overlapping", True))
            source = data.get("source", source)
        else:
            raise RleFormatError("Erwartet ein Objekt mit 'masks' oder eine Liste von SAM-Annotationen")

        masks = [self._rle(entry, index) for index, entry in enumerate(entries)]
        if isinstance(data, dict) and "height" in data and "width" in data:
            height, width = int(data["height"]), int(data["width"])
        elif masks:
            height, width = masks[0].height, masks[0].width
        else:
            raise RleFormatError("Leere Maskenliste ohne 'height'/'width'")
        return MaskSet(tuple(masks), height, width, overlapping=overlapping, source=source)

    @staticmethod
    def _sam_entry(item: Any, index: int) -> dict[str, Any]:
        if not isinstance(item, dict) or "segmentation" not in item:
            raise RleFormatError(f"SAM-Eintrag {index} ohne 'segmentation'")
        entry = dict(item["segmentation"])
        if "predicted_iou" in item:
            entry["score"] = item["predicted_iou"]
        return entry

    @staticmethod
    def _rle(entry: Any, index: int) -> RleMask:
        if not isinstance(entry, dict) or "size" not in entry or "counts" not in entry:
            raise RleFormatError(f"Maske {index}: 'size' und 'counts' erforderlich")
        counts = entry["counts"]
        if isinstance(counts, str):
            raise RleFormatError(f"Maske {index}: komprimiertes COCO-RLE wird nicht unterstützt, nur Zähllisten")
        try:
            height, width = (int(v) for v in entry["size"])
            counts = tuple(int(c) for c in counts)
        except (TypeError, ValueError) as err:
            raise RleFormatError(f"Maske {index}: ungültige Größe oder Zählwerte ({err})") from err
        score = entry.get("score")
        return RleMask(height, width, counts, None if score is None else float(score))


def load_masks(path: Path) -> MaskSet:
    return MaskJSONRepository().load(Path(path))


def save_masks(masks: MaskSet, path: Path) -> None:
    MaskJSONRepository().save(masks, Path(path))
