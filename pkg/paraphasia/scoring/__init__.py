"""Posterior grids and the CTC / cross-entropy loss calculus."""
from .grid import PosteriorGrid, read_grid, write_grid
from .losses import (
    JointLossConfig,
    StepDistributions,
    ctc_forward_loss,
    ctc_log_likelihood,
    dual_task_loss,
    joint_ctc_attention_loss,
    token_nll,
)

__all__ = [
    "JointLossConfig",
    "PosteriorGrid",
    "StepDistributions",
    "ctc_forward_loss",
    "ctc_log_likelihood",
    "dual_task_loss",
    "joint_ctc_attention_loss",
    "read_grid",
    "token_nll",
    "write_grid",
]
