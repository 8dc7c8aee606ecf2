"""
The exponential moving average that drives the target network.
"""

import numpy as np


def ema_update(target, online, omega):
    """
    Move the target parameters towards the online ones, in place.

    Weights and normalization parameters follow
    ``target = omega * target + (1 - omega) * online``; running
    statistics are copied from the online store. Online parameters the
    target does not hold (the predictor) are ignored.

    Parameters
    ----------
    target, online : ParamStore
        The two stores; every target name must exist in the online store.
    omega : float
        The target momentum, in [0, 1].
    """
    unmatched = [name for name in target if name not in online]
    if unmatched:
        raise KeyError(
            f"The online store lacks {len(unmatched)} target parameters, "
            f"e.g. '{unmatched[0]}'."
        )
    if not 0 <= omega <= 1:
        raise ValueError(f"Provide a momentum in [0, 1], not {omega}.")
    for name, tensor in target.items():
        source = online[name].data
        if target.role(name) == "running-stat":
            np.copyto(tensor.data, source)
        else:
            tensor.data[...] = omega * tensor.data + (1 - omega) * source
