"""Synthetic stereo world: cameras, scenes, renderer, reach task, expert, datasets."""

from .camera import (BehindCameraError, CameraIntrinsics, CameraRig, Pose,
                     disparity, project, project_points)
from .scene import Lighting, Scene, SceneObject
from .render import RenderResult, render, render_view
from .task import (ReachEnv, StereoObservation, TaskConfig, TaskInstance,
                   Trajectory, external_rig, replay_success, sample_task, wrist_rig)
from .expert import ExpertError, scripted_expert
from .dataset import DatasetFormatError, read_dataset, write_dataset

__all__ = [
    "BehindCameraError", "CameraIntrinsics", "CameraRig", "Pose", "disparity",
    "project", "project_points", "Lighting", "Scene", "SceneObject",
    "RenderResult", "render", "render_view", "ReachEnv", "StereoObservation",
    "TaskConfig", "TaskInstance", "Trajectory", "external_rig", "replay_success",
    "sample_task", "wrist_rig", "ExpertError", "scripted_expert",
    "DatasetFormatError", "read_dataset", "write_dataset",
]
