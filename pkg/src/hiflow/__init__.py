"""Rectified-flow sampling at high resolution, guided by the trajectory of a low resolution run."""

from .cascade import run_cascade
from .config import CascadeConfig, StageConfig, load_config, parse_config
from .fields import AnchoredField, CoarseToFineField, GaussianField, MlpField, make_field
from .guidance import GuidanceConfig, accel_align, direction_align, guided_sample, init_align
from .reference import ReferenceFlow, build_reference, ref_velocity_delta
from .sampler import Trajectory, euler_step, predict_clean, sample
from .schedule import NoiseSpec, TimeSchedule, make_schedule, mix_noise, sample_noise

__version__ = "0.1.0"
