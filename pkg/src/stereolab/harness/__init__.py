"""Experiment harness: configs, data, training, evaluation, experiments."""

from .checkpoint import (Checkpoint, CheckpointError, load_into,
                         module_params, read_checkpoint, save_checkpoint)
from .config import (MODALITIES, ConfigError, ExperimentConfig, HorizonConfig,
                     ModelConfig, TrainingConfig, config_from_dict,
                     load_config)
from .data import (Batch, DemoBuffer, depth_sidecar_path, ensure_demos,
                   generate_demos, load_demos, replay_check, task_depth_map,
                   write_demos)
from .evaluate import (DiffusionPlanner, EvalReport, ExpertPlanner,
                       RandomPlanner, evaluate, wilson_interval)
from .experiments import (DEFAULT_BASELINES, DEFAULT_DISTANCES, CompareResult,
                          SweepResult, compare_modalities, sweep_ratio,
                          sweep_summary)
from .gradcheck import GradCheckReport, MiniPolicy, full_pipeline_gradcheck
from .metrics import (MetricsError, MetricsRecord, MetricsWriter, best_success,
                      read_metrics)
from .modality import (ModalityPipeline, ViewBatch, build_modality,
                       prep_depth)
from .plots import plot_learning_curves, plot_modality_bars, plot_ratio_curve
from .probe import (CHANCE_RMSE, DepthProbe, ProbeConfig, ProbeResult,
                    render_dot_set, ridge_readout_rmse, train_probe)
from .timing import ComponentTimer, TimingWriter, read_timings
from .train import PolicyModel, TrainResult, build_policy, train

__all__ = [
    "Checkpoint", "CheckpointError", "load_into", "module_params",
    "read_checkpoint", "save_checkpoint",
    "MODALITIES", "ConfigError", "ExperimentConfig", "HorizonConfig",
    "ModelConfig", "TrainingConfig", "config_from_dict", "load_config",
    "Batch", "DemoBuffer", "depth_sidecar_path", "ensure_demos",
    "generate_demos", "load_demos", "replay_check", "task_depth_map",
    "write_demos",
    "DiffusionPlanner", "EvalReport", "ExpertPlanner", "RandomPlanner",
    "evaluate", "wilson_interval",
    "DEFAULT_BASELINES", "DEFAULT_DISTANCES", "CompareResult", "SweepResult",
    "compare_modalities", "sweep_ratio", "sweep_summary",
    "GradCheckReport", "MiniPolicy", "full_pipeline_gradcheck",
    "MetricsError", "MetricsRecord", "MetricsWriter", "best_success",
    "read_metrics",
    "ModalityPipeline", "ViewBatch", "build_modality", "prep_depth",
    "plot_learning_curves", "plot_modality_bars", "plot_ratio_curve",
    "CHANCE_RMSE", "DepthProbe", "ProbeConfig", "ProbeResult",
    "render_dot_set", "ridge_readout_rmse", "train_probe",
    "ComponentTimer", "TimingWriter", "read_timings",
    "PolicyModel", "TrainResult", "build_policy", "train",
]
