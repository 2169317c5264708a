"""
Black-Box-Suche über CRF-Parameter: Zufallssuche und Tree-structured Parzen Estimator.

Alle Vorschläge werden im Einheitswürfel gezogen (log-skalierte Parameter vorher
logarithmiert). Jeder Trial hat seinen eigenen Zufallsstrom
`default_rng([seed, trial_id])`; bei paralleler Auswertung sieht der TPE nur die
Beobachtungen abgeschlossener Blöcke, daher hängt das Ergebnis von (seed, width)
ab, nicht von der Ausführungsreihenfolge.
"""

import json
import logging
import math
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import StrEnum
from pathlib import Path

import numpy as np
import pandas as pd

from ..config import DEFAULT_CRF_ITERATIONS, DEFAULT_SEARCH_BOUNDS, TPE_CANDIDATES, TPE_GAMMA, TPE_STARTUP_TRIALS
from ..errors import ConfigError, DataError, NumericalError
from ..models import CrfParams

logger = logging.getLogger(__name__)

Objective = Callable[[dict[str, float]], float]


class ParamScale(StrEnum):
    LINEAR = "linear"
    LOG = "log"


class SearchStrategy(StrEnum):
    RANDOM = "random"
    TPE = "tpe"


class TrialStatus(StrEnum):
    OK = "ok"
    FAILED = "failed"


@dataclass(frozen=True)
class ParamSpec:
    name: str
    low: float
    high: float
    scale: ParamScale = ParamScale.LINEAR

    def __post_init__(self):
        object.__setattr__(self, "scale", ParamScale(self.scale))
        if not self.low < self.high:
            raise ConfigError(f"Parameter '{self.name}': untere Grenze {self.low} nicht kleiner als {self.high}")
        if self.scale == ParamScale.LOG and self.low <= 0:
            raise ConfigError(f"Parameter '{self.name}': log-Skala verlangt low > 0, erhalten {self.low}")

    def _bounds(self) -> tuple[float, float]:
        if self.scale == ParamScale.LOG:
            return math.log(self.low), math.log(self.high)
        return self.low, self.high

    def from_unit(self, u: float) -> float:
        lo, hi = self._bounds()
        value = lo + float(np.clip(u, 0.0, 1.0)) * (hi - lo)
        value = math.exp(value) if self.scale == ParamScale.LOG else value
        return min(max(value, self.low), self.high)

    def to_unit(self, value: float) -> float:
        lo, hi = self._bounds()
        value = math.log(value) if self.scale == ParamScale.LOG else value
        return (value - lo) / (hi - lo)


@dataclass(frozen=True)
class SearchSpace:
    params: tuple[ParamSpec, ...]
    budget: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if self.budget < 1:
            raise ConfigError(f"Trial-Budget muss >= 1 sein: {self.budget}")
        if not self.params:
            raise ConfigError("Suchraum ohne Parameter")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ConfigError(f"Doppelte Parameternamen im Suchraum: {names}")

    @classmethod
    def for_crf(
        cls,
        num_bands: int,
        budget: int,
        seed: int = 0,
        bounds: dict[str, tuple[float, float, str]] | None = None,
    ) -> "SearchSpace":
        """Suchraum für w1, w2, θα, θγ und θβ je Konditionierungsband."""
        bounds = {**DEFAULT_SEARCH_BOUNDS, **(bounds or {})}
        params = [ParamSpec(name, *bounds[name]) for name in ("w1", "w2", "theta_alpha", "theta_gamma")]
        params += [ParamSpec(f"theta_beta_{band}", *bounds["theta_beta"]) for band in range(num_bands)]
        return cls(tuple(params), budget, seed)

    @property
    def dim(self) -> int:
        return len(self.params)

    def decode(self, unit: np.ndarray) -> dict[str, float]:
        return {spec.name: spec.from_unit(u) for spec, u in zip(self.params, unit, strict=True)}

    def encode(self, params: dict[str, float]) -> np.ndarray:
        return np.array([spec.to_unit(params[spec.name]) for spec in self.params])


@dataclass
class TrialRecord:
    trial_id: int
    params: dict[str, float]
    score: float | None
    status: TrialStatus
    duration: float
    error: str | None = None


@dataclass
class TuneResult:
    best_params: dict[str, float]
    best_score: float
    trials: list[TrialRecord] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        """Trial-Log als DataFrame, eine Spalte je Parameter."""
        rows = [
            {
                "trial_id": t.trial_id,
                "status": str(t.status),
                "score": t.score,
                "duration": t.duration,
                **t.params,
            }
            for t in self.trials
        ]
        return pd.DataFrame(rows)


def crf_params_from_trial(params: dict[str, float], num_iterations: int = DEFAULT_CRF_ITERATIONS) -> CrfParams:
    """Wandelt ein Suchergebnis (theta_beta_0, theta_beta_1, ...) in CrfParams um."""
    betas = sorted(
        (int(name.rsplit("_", 1)[1]), value) for name, value in params.items() if name.startswith("theta_beta_")
    )
    if [index for index, _ in betas] != list(range(len(betas))):
        raise DataError(f"theta_beta-Indizes nicht lückenlos: {[index for index, _ in betas]}")
    return CrfParams(
        w1=params["w1"],
        w2=params["w2"],
        theta_alpha=params["theta_alpha"],
        theta_gamma=params["theta_gamma"],
        theta_beta=tuple(value for _, value in betas),
        num_iterations=num_iterations,
    )


def _scott_bandwidth(samples: np.ndarray) -> float:
    if samples.size < 2:
        return 0.25
    std = max(float(samples.std(ddof=1)), 0.01)
    return 1.06 * std * samples.size ** (-0.2)


def _parzen_log_density(x: np.ndarray, samples: np.ndarray, bandwidth: float) -> np.ndarray:
    """Log-Dichte einer Gauß-Mischung über `samples` plus gleichverteiltem Prior auf [0, 1]."""
    components = len(samples) + 1
    if samples.size:
        z = (x[:, np.newaxis] - samples[np.newaxis, :]) / bandwidth
        gauss = np.exp(-0.5 * z**2).sum(axis=1) / (bandwidth * math.sqrt(2.0 * math.pi))
    else:
        gauss = np.zeros_like(x)
    return np.log((gauss + 1.0) / components + 1e-300)


class TpeProposer:
    """Zwei-Dichten-Vorschlag: l(x) aus den besten γ-Anteil, g(x) aus dem Rest."""

    def __init__(
        self,
        gamma: float = TPE_GAMMA,
        candidates: int = TPE_CANDIDATES,
        startup: int = TPE_STARTUP_TRIALS,
    ):
        self.gamma = gamma
        self.candidates = candidates
        self.startup = startup

    def propose(self, observations: list[tuple[np.ndarray, float]], dim: int, rng: np.random.Generator) -> np.ndarray:
        if len(observations) < max(self.startup, 2):
            return rng.random(dim)
        ordered = sorted(observations, key=lambda obs: obs[1])
        n_good = max(1, int(math.ceil(self.gamma * len(ordered))))
        good = np.array([unit for unit, _ in ordered[:n_good]])
        bad = np.array([unit for unit, _ in ordered[n_good:]]).reshape(-1, dim)

        bandwidths_good = [_scott_bandwidth(good[:, d]) for d in range(dim)]
        bandwidths_bad = [_scott_bandwidth(bad[:, d]) for d in range(dim)]
        candidates = np.empty((self.candidates, dim))
        for d in range(dim):
            pick = rng.integers(0, n_good + 1, size=self.candidates)
            from_prior = pick == n_good
            centers = good[np.minimum(pick, n_good - 1), d]
            draws = rng.normal(centers, bandwidths_good[d])
            candidates[:, d] = np.clip(np.where(from_prior, rng.random(self.candidates), draws), 0.0, 1.0)
        ratio = np.zeros(self.candidates)
        for d in range(dim):
            ratio += _parzen_log_density(candidates[:, d], good[:, d], bandwidths_good[d])
            ratio -= _parzen_log_density(candidates[:, d], bad[:, d], bandwidths_bad[d])
        index = int(np.argmax(ratio))
        logger.debug(f"TPE: {n_good} gute / {len(bad)} übrige Beobachtungen, log l/g = {ratio[index]:.3f}")
        return candidates[index]


def _run_trial(trial_id: int, params: dict[str, float], objective: Objective) -> TrialRecord:
    start = time.perf_counter()
    try:
        score = float(objective(params))
        if not math.isfinite(score):
            raise NumericalError(f"Zielfunktion lieferte {score}")
    except Exception as err:
        logger.warning(f"Trial {trial_id} fehlgeschlagen: {err}")
        return TrialRecord(trial_id, params, None, TrialStatus.FAILED, time.perf_counter() - start, str(err))
    return TrialRecord(trial_id, params, score, TrialStatus.OK, time.perf_counter() - start)


def write_trial_log(trials: list[TrialRecord], log_path: Path) -> None:
    """Schreibt das Trial-Log zeilenweise als JSON (ein Trial je Zeile)."""
    log_path.parent.mkdir(parents=True, exist_ok=True)
    with open(log_path, "w", encoding="utf-8") as file:
        for trial in trials:
            record = asdict(trial)
            record["status"] = str(trial.status)
            file.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def tune(
    search: SearchSpace,
    objective: Objective,
    strategy: SearchStrategy | str = SearchStrategy.TPE,
    width: int = 1,
    log_path: Path | None = None,
    proposer: TpeProposer | None = None,
) -> TuneResult:
    """
    Minimiert `objective` über `search`.

    Args:
        search: Suchraum mit Budget und Seed
        objective: Parameter-Dict -> Score (kleiner ist besser)
        strategy: Zufallssuche oder TPE
        width: Anzahl gleichzeitig ausgewerteter Trials
        log_path: Optionales JSON-Lines-Trial-Log

    Returns:
        Bester Parametersatz, sein Score und das vollständige Trial-Log
    """
    strategy = SearchStrategy(strategy)
    if width < 1:
        raise ConfigError(f"width muss >= 1 sein: {width}")
    proposer = proposer or TpeProposer()

    trials: list[TrialRecord] = []
    observations: list[tuple[np.ndarray, float]] = []
    with ThreadPoolExecutor(max_workers=width) as pool:
        for batch_start in range(0, search.budget, width):
            batch_ids = range(batch_start, min(batch_start + width, search.budget))
            proposals = []
            for trial_id in batch_ids:
                rng = np.random.default_rng([search.seed, trial_id])
                if strategy == SearchStrategy.TPE:
                    unit = proposer.propose(observations, search.dim, rng)
                else:
                    unit = rng.random(search.dim)
                proposals.append((trial_id, search.decode(unit)))

            records = list(pool.map(lambda item: _run_trial(item[0], item[1], objective), proposals))
            for record in records:
                trials.append(record)
                if record.status == TrialStatus.OK:
                    observations.append((search.encode(record.params), record.score))
                logger.info(f"Trial {record.trial_id + 1}/{search.budget}: {record.status} score={record.score}")
            if log_path is not None:
                write_trial_log(trials, log_path)

    completed = [t for t in trials if t.status == TrialStatus.OK]
    if not completed:
        raise NumericalError(f"Alle {len(trials)} Trials sind fehlgeschlagen")
    best = min(completed, key=lambda t: (t.score, t.trial_id))
    logger.info(f"Beste Parameter nach {len(trials)} Trials: score={best.score:.6f} {best.params}")
    return TuneResult(best.params, best.score, trials)
