"""Variational temporal deconfounder: simulator, models, metrics."""

from vtdlib._core import (
    Dataset,
    ExperimentConfig,
    FitResult,
    ModelConfig,
    Patient,
    SimConfig,
    check_primitives,
    check_total_loss_gradient,
    evaluate_fit,
    fit_model,
    load_dataset,
    load_fit,
    predict_ite,
    run_experiment,
    save_dataset,
    save_fit,
    simulate,
    split,
)

__all__ = [
    "Dataset",
    "ExperimentConfig",
    "FitResult",
    "ModelConfig",
    "Patient",
    "SimConfig",
    "check_primitives",
    "check_total_loss_gradient",
    "evaluate_fit",
    "fit_model",
    "load_dataset",
    "load_fit",
    "predict_ite",
    "run_experiment",
    "save_dataset",
    "save_fit",
    "simulate",
    "split",
]
