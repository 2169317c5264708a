"""
Moderne CLI für lulc2label.
Erzeugt Segmentierungslabels für Luftbilder aus LULC, Höhenmodell und Posenlog.
"""

import logging
from collections.abc import Callable
from datetime import datetime
from pathlib import Path
from typing import Annotated, NoReturn

import typer
from rich import box
from rich.align import Align
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn
from rich.table import Table
from rich.text import Text

from lulc2label.analyzer import MetricsAnalyzer, create_ablation_table, create_raster_panel
from lulc2label.errors import Lulc2LabelError
from lulc2label.factory import PipelineConfigFactory, load_config
from lulc2label.repo import read_raster
from lulc2label.service import LabelPipelineService, StageResult

# Rich Console Setup
console = Console()
app = typer.Typer(
    name="lulc2label",
    help="🛰️  Segmentierungslabels für Luftbilder aus LULC-Karten",
    rich_markup_mode="rich",
)

ConfigOption = Annotated[Path, typer.Option("--config", "-c", help="⚙️  Pipeline-Konfiguration (JSON)")]
OutputOption = Annotated[
    Path | None,
    typer.Option("--output", "-o", help="📤 Ausgabeverzeichnis (überschreibt Config)"),
]
WorkersOption = Annotated[int | None, typer.Option("--workers", "-w", help="🧵 Anzahl paralleler Worker")]
SeedOption = Annotated[int | None, typer.Option("--seed", help="🎲 Seed (überschreibt Config)")]
ForceOption = Annotated[
    bool,
    typer.Option("--force", "-f", help="💪 Ignoriert zwischengespeicherte Ergebnisse"),
]
VerboseOption = Annotated[bool, typer.Option("--verbose", "-v", help="🔍 Ausführliche Ausgabe")]
LogFileOption = Annotated[Path | None, typer.Option("--log-file", help="📝 Pfad zur Log-Datei")]


# Logging Setup
def setup_logging(verbose: bool = False, log_file: Path | None = None) -> None:
    """Konfiguriert Logging mit Rich Handler."""
    level = logging.DEBUG if verbose else logging.INFO

    handlers: list[logging.Handler] = [RichHandler(console=console, rich_tracebacks=True)]

    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(
            logging.Formatter("%(asctime)s - %(levelname)s - %(message)s"),
        )
        handlers.append(file_handler)

    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=handlers,
        force=True,
    )


logger = logging.getLogger(__name__)


class FrameStats:
    """Klasse für Verarbeitungsstatistiken mit Rich-Integration."""

    def __init__(self):
        self.processed = 0
        self.failed = 0
        self.skipped = 0
        self.cached = 0
        self.start_time = datetime.now()
        self.errors: list[tuple[str, str]] = []

    def add_result(self, result: StageResult) -> None:
        """Übernimmt die Bildzählungen einer Stufe."""
        if result.cached:
            self.cached += 1
        self.processed += len(result.succeeded)
        self.failed += len(result.failed)
        self.skipped += len(result.skipped)
        self.errors.extend(result.failed)

    def get_duration(self) -> str:
        """Gibt die Verarbeitungsdauer zurück."""
        duration = datetime.now() - self.start_time
        return f"{duration.total_seconds():.1f}s"

    def create_summary_table(self) -> Table:
        """Erstellt eine Zusammenfassungstabelle."""
        table = Table(title="📊 Verarbeitungsstatistik", box=box.ROUNDED)

        table.add_column("Kategorie", style="cyan", no_wrap=True)
        table.add_column("Anzahl", style="magenta", justify="right")
        table.add_column("Status", style="green")

        total = self.processed + self.failed + self.skipped
        success_rate = (self.processed / total * 100) if total > 0 else 0

        table.add_row("✅ Erfolgreich", str(self.processed), f"{success_rate:.1f}%")
        table.add_row(
            "❌ Fehlgeschlagen",
            str(self.failed),
            "🔴" if self.failed > 0 else "🟢",
        )
        table.add_row("⏭️  Übersprungen", str(self.skipped), "ℹ️")

        if self.cached > 0:
            table.add_row("♻️  Aus dem Cache", str(self.cached), "📁")

        table.add_row("⏱️  Dauer", self.get_duration(), "")

        return table

    def create_error_table(self) -> Table:
        error_table = Table(title="🔍 Fehler", box=box.ROUNDED)
        error_table.add_column("Bild", style="yellow")
        error_table.add_column("Fehler", style="red")
        for frame_id, error in self.errors:
            error_table.add_row(frame_id, error[:80] + "..." if len(error) > 80 else error)
        return error_table


def create_header() -> Panel:
    """Erstellt einen schönen Header."""
    header_text = Text()
    header_text.append("🛰️  LULC → LABEL  🛰️", style="bold blue")
    header_text.append("\n")
    header_text.append("Satelliten-LULC, Höhenmodell und Pose zu Segmentierungslabels", style="dim")

    return Panel(Align.center(header_text), box=box.DOUBLE, style="blue")


def fail(err: Lulc2LabelError, verbose: bool = False) -> NoReturn:
    """Meldet einen fachlichen Fehler und beendet mit dessen Exit-Code."""
    console.print(f"❌ [red]{type(err).__name__}:[/red] {err}")
    logger.error(f"{type(err).__name__}: {err}")
    if verbose:
        logger.exception("Detaillierter Fehler:")
    raise typer.Exit(err.exit_code) from err


def prepare(
    config: Path,
    output: Path | None,
    workers: int | None,
    seed: int | None,
    verbose: bool,
    log_file: Path | None,
) -> PipelineConfigFactory:
    setup_logging(verbose, log_file)
    console.print(create_header())
    console.print()
    factory = load_config(config).with_overrides(output, workers, seed)
    logger.info(f"Konfiguration {config} geladen, Ausgabe nach {factory.output_dir}")
    return factory


def run_stages(
    stages: list[tuple[str, Callable[[], StageResult]]],
    verbose: bool = False,
) -> list[StageResult]:
    """Führt Stufen nacheinander aus; jede Stufe ist eine Barriere für die nächste."""
    stats = FrameStats()
    results = []
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        TextColumn("[blue]{task.fields[current_stage]}"),
        console=console,
        transient=False,
    ) as progress:
        task = progress.add_task("🔄 Verarbeite Stufen...", total=len(stages), current_stage="")
        for name, stage in stages:
            progress.update(task, current_stage=name)
            result = stage()
            stats.add_result(result)
            results.append(result)
            status = "♻️  aus dem Cache" if result.cached else "✅ fertig"
            console.print(f"{status}: [cyan]{name}[/cyan]")
            progress.advance(task)

    console.print(stats.create_summary_table())
    if stats.errors and verbose:
        console.print(stats.create_error_table())
    logger.info(
        f"Verarbeitung abgeschlossen: {stats.processed} "
        f"erfolgreich, {stats.failed} fehlgeschlagen, {stats.skipped} übersprungen",
    )
    return results


def execute(
    stage_names: list[str],
    config: Path,
    output: Path | None,
    workers: int | None,
    seed: int | None,
    force: bool,
    verbose: bool,
    log_file: Path | None,
) -> list[StageResult]:
    try:
        factory = prepare(config, output, workers, seed, verbose, log_file)
        service = LabelPipelineService(factory, force=force)
        stages = [(name, getattr(service, name.replace("-", "_"))) for name in stage_names]
        results = run_stages(stages, verbose)
    except Lulc2LabelError as err:
        fail(err, verbose)
    console.print("\n🎉 [green]Verarbeitung erfolgreich abgeschlossen![/green]")
    return results


@app.command("refine-lulc")
def refine_lulc_command(
    config: ConfigOption,
    output: OutputOption = None,
    workers: WorkersOption = None,
    seed: SeedOption = None,
    force: ForceOption = False,
    verbose: VerboseOption = False,
    log_file: LogFileOption = None,
):
    """🌍 Verfeinert grobe LULC-Logits mit dem Dense CRF am Luftbild."""
    execute(["refine-lulc"], config, output, workers, seed, force, verbose, log_file)


@app.command("render")
def render_command(
    config: ConfigOption,
    output: OutputOption = None,
    workers: WorkersOption = None,
    seed: SeedOption = None,
    force: ForceOption = False,
    verbose: VerboseOption = False,
    log_file: LogFileOption = None,
):
    """🎥 Rendert projizierte Labels für jedes Bild aus Pose und Höhenmodell."""
    execute(["render"], config, output, workers, seed, force, verbose, log_file)


@app.command("refine-labels")
def refine_labels_command(
    config: ConfigOption,
    output: OutputOption = None,
    workers: WorkersOption = None,
    seed: SeedOption = None,
    force: ForceOption = False,
    verbose: VerboseOption = False,
    log_file: LogFileOption = None,
):
    """🧩 Verfeinert projizierte Labels mit Superpixeln oder externen Masken."""
    execute(["refine-labels"], config, output, workers, seed, force, verbose, log_file)


@app.command("evaluate")
def evaluate_command(
    config: ConfigOption,
    output: OutputOption = None,
    workers: WorkersOption = None,
    seed: SeedOption = None,
    force: ForceOption = False,
    verbose: VerboseOption = False,
    log_file: LogFileOption = None,
):
    """📏 Berechnet IoU je Klasse, Dataset- und Trajektorien-mIoU."""
    execute(["evaluate"], config, output, workers, seed, force, verbose, log_file)
    _print_metrics(config, output)


@app.command("run")
def run_command(
    config: ConfigOption,
    output: OutputOption = None,
    workers: WorkersOption = None,
    seed: SeedOption = None,
    force: ForceOption = False,
    verbose: VerboseOption = False,
    log_file: LogFileOption = None,
    evaluate: bool = typer.Option(True, "--evaluate/--no-evaluate", help="📏 Auswertung anschließen"),
):
    """🚀 Führt alle Stufen nacheinander aus: refine-lulc, render, refine-labels, evaluate."""
    stages = ["refine-lulc", "render", "refine-labels"] + (["evaluate"] if evaluate else [])
    execute(stages, config, output, workers, seed, force, verbose, log_file)
    if evaluate:
        _print_metrics(config, output)


def _print_metrics(config: Path, output: Path | None) -> None:
    output_dir = output.resolve() if output else load_config(config).output_dir
    try:
        MetricsAnalyzer.load_from_directory(output_dir / "metrics").print_summary_statistics()
    except Lulc2LabelError as err:
        fail(err)


@app.command("tune")
def tune_command(
    config: ConfigOption,
    output: OutputOption = None,
    workers: WorkersOption = None,
    seed: SeedOption = None,
    force: ForceOption = False,
    verbose: VerboseOption = False,
    log_file: LogFileOption = None,
):
    """🎛️  Sucht CRF-Parameter gegen eine hochaufgelöste Referenz-LULC."""
    (result,) = execute(["tune"], config, output, workers, seed, force, verbose, log_file)
    if result.table is not None:
        best = result.table[result.table["status"] == "ok"].sort_values(["score", "trial_id"]).head(5)
        table = Table(title="🏆 Beste Trials", box=box.ROUNDED)
        for column in best.columns:
            style = "cyan" if column == "trial_id" else "magenta"
            table.add_column(str(column), style=style, justify="right")
        for row in best.itertuples(index=False):
            table.add_row(*(f"{v:.4g}" if isinstance(v, float) else str(v) for v in row))
        console.print(table)


@app.command("ablate")
def ablate_command(
    config: ConfigOption,
    output: OutputOption = None,
    workers: WorkersOption = None,
    seed: SeedOption = None,
    force: ForceOption = False,
    verbose: VerboseOption = False,
    log_file: LogFileOption = None,
):
    """🧪 Führt die konfigurierte Ablation auf einer synthetischen Szene aus."""
    (result,) = execute(["ablate"], config, output, workers, seed, force, verbose, log_file)
    if result.table is not None:
        console.print(create_ablation_table(result.table, f"🧪 Ablation {result.stage}"))


@app.command("synth")
def synth_command(
    config: ConfigOption,
    output: OutputOption = None,
    workers: WorkersOption = None,
    seed: SeedOption = None,
    force: ForceOption = False,
    verbose: VerboseOption = False,
    log_file: LogFileOption = None,
):
    """🧬 Erzeugt einen synthetischen Datensatz samt passender Konfiguration."""
    execute(["synth"], config, output, workers, seed, force, verbose, log_file)


@app.command("validate")
def validate_config(
    config: Path = typer.Argument(..., help="⚙️  Pipeline-Konfiguration (JSON)"),
):
    """✅ Validiert eine Pipeline-Konfiguration und prüft alle Datenpfade."""

    try:
        factory = load_config(config)
        factory.class_maps()
        factory.mask_provider()
    except Lulc2LabelError as err:
        fail(err)

    results_table = Table(title="📊 Validierungsergebnisse", box=box.ROUNDED)
    results_table.add_column("Pfad", style="bold")
    results_table.add_column("Wert")
    results_table.add_column("Status", justify="center")
    missing = factory.missing_paths()
    for name, path in factory.config.paths:
        if path is None:
            results_table.add_row(name, "–", "⏭️")
        elif name == "output_dir":
            results_table.add_row(name, str(path), "📁")
        else:
            results_table.add_row(name, str(path), "❌" if f"{name}: {path}" in missing else "✅")
    console.print(results_table)

    if missing:
        console.print(f"\n❌ [red]{len(missing)} Pfad(e) existieren nicht[/red]")
        raise typer.Exit(2)
    console.print("\n🎉 [green]Konfiguration ist gültig![/green]")


@app.command("info")
def show_info(raster_file: Path = typer.Argument(..., help="🗺️  GeoTIFF- oder Sidecar-Raster")):
    """📋 Zeigt Metadaten eines Rasters an."""

    if not raster_file.exists():
        console.print(f"❌ [red]Datei nicht gefunden:[/red] {raster_file}")
        raise typer.Exit(3)

    try:
        with console.status("[bold green]📖 Lade Raster..."):
            raster = read_raster(raster_file, require_georef=False)
    except Lulc2LabelError as err:
        fail(err)

    console.print(create_raster_panel(raster, raster_file))


def main():
    app()


if __name__ == "__main__":
    main()

