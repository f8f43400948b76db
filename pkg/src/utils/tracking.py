"""
MLflow tracking for verification runs.
"""

import logging
from pathlib import Path
from typing import Sequence

import mlflow

from src.constants import MLFLOW_EXPERIMENT_NAME

logger = logging.getLogger(__name__)


def _metric_key(name: str) -> str:
    return name.replace("-", "_")


def track_verification(results: Sequence, trials: int, seed: int, report_path: Path | None = None) -> str:
    """
    Log one verify invocation as an MLflow run.

    Args:
        results: SuiteResult records
        trials: Trials per suite
        seed: Seed of the run
        report_path: Report file to attach as an artifact

    Returns:
        MLflow run id
    """
    mlflow.set_experiment(MLFLOW_EXPERIMENT_NAME)
    with mlflow.start_run() as run:
        mlflow.log_params({"trials": trials, "seed": seed, "suites": ",".join(r.name for r in results)})
        metrics = {}
        for r in results:
            key = _metric_key(r.name)
            metrics[f"{key}_passed"] = float(r.passed)
            metrics[f"{key}_failures"] = float(r.failures)
            metrics[f"{key}_max_violation"] = float(r.max_violation)
        metrics["all_passed"] = float(all(r.passed for r in results))
        mlflow.log_metrics(metrics)
        if report_path is not None:
            mlflow.log_artifact(str(report_path), artifact_path="reports")
        logger.info(f"Logged verification run {run.info.run_id} to experiment {MLFLOW_EXPERIMENT_NAME}")
        return run.info.run_id
