"""
Learning rate and target momentum schedules.
"""

import math


def _check_step(step, total_steps):
    if not 0 <= step <= total_steps:
        raise ValueError(f"Provide a step in [0, {total_steps}], not {step}.")


def cosine_lr(step, total_steps, warmup_steps, base_lr):
    """
    Ramp the learning rate up linearly, then decay it along a half cosine.

    Parameters
    ----------
    step : int
        The current step, in [0, total_steps].
    total_steps : int
        The length of the run.
    warmup_steps : int
        The length of the linear ramp from 0 to `base_lr`.
    base_lr : float
        The peak learning rate.
    """
    _check_step(step, total_steps)
    if step < warmup_steps:
        return base_lr * step / warmup_steps
    if total_steps == warmup_steps:
        return base_lr
    progress = (step - warmup_steps) / (total_steps - warmup_steps)
    return base_lr * (math.cos(math.pi * progress) + 1) / 2


def ema_omega(step, total_steps, omega_base=0.996):
    """Raise the target momentum from `omega_base` to 1 along a half cosine."""
    _check_step(step, total_steps)
    return 1 - (1 - omega_base) * (math.cos(math.pi * step / total_steps) + 1) / 2
