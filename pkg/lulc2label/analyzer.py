"""
Analyse-Modul für Pipeline-Ergebnisse.
Bietet Label-Vorschauen, Metrik-Tabellen und Ablationsdiagramme.
"""

import logging
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns
from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .config import LABEL_COLORS, UNKNOWN_COLOR
from .errors import DataError
from .models import Raster

logger = logging.getLogger(__name__)
console = Console()

# Matplotlib für bessere Darstellung konfigurieren
plt.style.use("seaborn-v0_8")
sns.set_palette("husl")

ABLATION_AXES = {
    "sigma": "Standardabweichung (m bzw. °)",
    "resolution": "LULC-Auflösung (m/Pixel)",
    "offset_s": "Zeitversatz (s)",
    "elevation": "Höhenquelle",
}


def label_rgb(labels: np.ndarray) -> np.ndarray:
    """Färbt ein Labelbild ein; IDs ohne Farbe und 255 werden schwarz."""
    palette = np.tile(np.asarray(UNKNOWN_COLOR, dtype=np.float64), (256, 1))
    palette[: len(LABEL_COLORS)] = LABEL_COLORS
    return palette[np.asarray(labels, dtype=np.uint8)]


def save_label_png(labels: np.ndarray, output_path: Path) -> None:
    """Speichert eine eingefärbte Label-Vorschau als PNG."""
    if labels.ndim != 2:
        raise DataError(f"Labelbild muss 2D sein, erhalten {labels.shape}")
    output_path.parent.mkdir(parents=True, exist_ok=True)
    plt.imsave(output_path, label_rgb(labels))


def _ablation_x(table: pd.DataFrame) -> str:
    for column in ABLATION_AXES:
        if column in table.columns:
            return column
    raise DataError(f"Ablationstabelle ohne bekannte Stufenspalte: {list(table.columns)}")


def plot_ablation(table: pd.DataFrame, output_path: Path) -> None:
    """
    Zeichnet mittleres mIoU je Stufe mit dem 2.5/97.5-Perzentilband.

    Eine Teilgrafik je Rauschachse (falls vorhanden), eine Linie je Klassensatz.
    """
    if table.empty:
        raise DataError("Leere Ablationstabelle")
    x = _ablation_x(table)
    panels = list(dict.fromkeys(table["axis"])) if "axis" in table.columns else [None]
    class_sets = sorted(table["class_set"].unique())
    palette = dict(zip(class_sets, sns.color_palette("husl", len(class_sets)), strict=True))

    fig, axes = plt.subplots(1, len(panels), figsize=(6 * len(panels), 4.5), squeeze=False)
    for ax, panel in zip(axes[0], panels, strict=True):
        subset = table if panel is None else table[table["axis"] == panel]
        for class_set in class_sets:
            rows = subset[subset["class_set"] == class_set]
            if x == "elevation":
                positions = np.arange(len(rows))
                ax.set_xticks(positions, rows[x].tolist())
            else:
                rows = rows.sort_values(x)
                positions = rows[x].to_numpy()
            ax.plot(positions, rows["miou_mean"], marker="o", color=palette[class_set], label=class_set)
            ax.fill_between(positions, rows["miou_low"], rows["miou_high"], color=palette[class_set], alpha=0.25)
        ax.set_title(f"Achse: {panel}" if panel else "mIoU je Stufe", fontweight="bold")
        ax.set_xlabel(ABLATION_AXES[x])
        ax.set_ylabel("mIoU")
        ax.grid(alpha=0.3)
        ax.legend(title="Klassensatz")

    fig.tight_layout()
    output_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output_path, dpi=300, bbox_inches="tight")
    plt.close(fig)
    console.print(f"📊 Diagramm gespeichert: {output_path}")


class MetricsAnalyzer:
    """Zeigt Auswertungstabellen (mIoU je Klassensatz und Trajektorie) an."""

    def __init__(self, per_class: pd.DataFrame, summary: pd.DataFrame):
        self.per_class = per_class
        self.summary = summary

    @classmethod
    def load_from_directory(cls, metrics_dir: Path) -> "MetricsAnalyzer":
        """Lädt per_class_iou.csv und summary.csv einer Auswertung."""
        files = [metrics_dir / "per_class_iou.csv", metrics_dir / "summary.csv"]
        for file in files:
            if not file.exists():
                raise DataError(f"Datei nicht gefunden: {file}")
        return cls(pd.read_csv(files[0]), pd.read_csv(files[1]))

    def create_summary_table(self) -> Table:
        table = Table(title="📊 mIoU je Klassensatz", box=box.ROUNDED)
        table.add_column("Klassensatz", style="cyan", no_wrap=True)
        table.add_column("Bilder", style="magenta", justify="right")
        table.add_column("Trajektorien", style="magenta", justify="right")
        table.add_column("Dataset mIoU", style="green", justify="right")
        table.add_column("Trajectory avg. mIoU", style="green", justify="right")
        for row in self.summary.itertuples(index=False):
            table.add_row(
                str(row.class_set),
                str(row.frames),
                str(row.trajectories),
                f"{row.dataset_miou:.4f}",
                f"{row.trajectory_avg_miou:.4f}",
            )
        return table

    def create_per_class_table(self, class_set: str) -> Table:
        """IoU je Klasse (Zeilen) und Trajektorie (Spalten) eines Klassensatzes."""
        rows = self.per_class[self.per_class["class_set"] == class_set]
        pivot = rows.pivot_table(index="class_name", columns="trajectory", values="iou", sort=False)
        table = Table(title=f"🔍 IoU je Klasse ({class_set})", box=box.ROUNDED)
        table.add_column("Klasse", style="cyan")
        for column in pivot.columns:
            table.add_column(str(column), style="magenta", justify="right")
        for name, values in pivot.iterrows():
            table.add_row(str(name), *("–" if pd.isna(v) else f"{v:.3f}" for v in values))
        return table

    def print_summary_statistics(self) -> None:
        """Zeigt zusammenfassende Statistiken an."""
        console.print(self.create_summary_table())
        for class_set in self.summary["class_set"]:
            console.print(self.create_per_class_table(class_set))


def create_ablation_table(table: pd.DataFrame, title: str = "🧪 Ablation") -> Table:
    """Rich-Tabelle einer Ablation: Stufe, Klassensatz, Mittelwert und Band."""
    x = _ablation_x(table)
    rich_table = Table(title=title, box=box.ROUNDED)
    if "axis" in table.columns:
        rich_table.add_column("Achse", style="cyan")
    rich_table.add_column(ABLATION_AXES[x], style="cyan", justify="right")
    rich_table.add_column("Klassensatz", style="cyan")
    rich_table.add_column("mIoU", style="green", justify="right")
    rich_table.add_column("2.5 %", style="magenta", justify="right")
    rich_table.add_column("97.5 %", style="magenta", justify="right")
    for row in table.to_dict("records"):
        cells = [str(row["axis"])] if "axis" in table.columns else []
        cells += [
            str(row[x]),
            str(row["class_set"]),
            f"{row['miou_mean']:.4f}",
            f"{row['miou_low']:.4f}",
            f"{row['miou_high']:.4f}",
        ]
        rich_table.add_row(*cells)
    return rich_table


def create_raster_panel(raster: Raster, path: Path) -> Panel:
    """Metadaten eines Rasters für `lulc2label info`."""
    table = Table(box=box.SIMPLE, show_header=False)
    table.add_column("Feld", style="cyan")
    table.add_column("Wert", style="magenta")
    t = raster.transform
    table.add_row("Größe", f"{raster.width} x {raster.height} Pixel, {raster.bands} Band/Bänder")
    table.add_row("Datentyp", str(raster.dtype))
    table.add_row("CRS", str(raster.crs))
    table.add_row("Ursprung", f"({t.origin_x:.3f}, {t.origin_y:.3f})")
    table.add_row("Pixelgröße", f"{t.pixel_width:g} x {t.pixel_height:g}")
    table.add_row("Nodata", str(raster.nodata))
    if raster.is_label:
        ids, counts = np.unique(raster.band(0), return_counts=True)
        table.add_row("Klassen", ", ".join(f"{i}: {c}" for i, c in zip(ids, counts, strict=True)))
    else:
        data = raster.data.astype(np.float64)
        table.add_row("Wertebereich", f"{np.nanmin(data):g} .. {np.nanmax(data):g}")
    return Panel(table, title=f"🗺️  {path.name}", box=box.ROUNDED, style="blue")
