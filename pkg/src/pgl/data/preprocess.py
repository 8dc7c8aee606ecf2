"""
Intensity preprocessing of whole volumes.
"""

import dataclasses

import numpy as np

STD_GUARD = 1e-8
HU_WINDOW = (-1024.0, 325.0)


def preprocess(volume, clip_lo=HU_WINDOW[0], clip_hi=HU_WINDOW[1]):
    """
    Clip the intensities of a volume, then standardize them.

    The mean and standard deviation are taken over the whole clipped
    volume; a constant volume becomes all zeros.

    Parameters
    ----------
    volume : Volume
        The volume to transform (left unchanged).
    clip_lo, clip_hi : float
        The intensity window (default: -1024 to 325, in Hounsfield units).

    Returns
    -------
    volume : Volume
        A new volume with the same labels and provenance.
    """
    if not clip_lo < clip_hi:
        raise ValueError(f"Provide a valid intensity window, not [{clip_lo}, {clip_hi}].")
    clipped = np.clip(volume.values.astype(np.float64), clip_lo, clip_hi)
    centered = clipped - clipped.mean()
    standardized = centered / max(float(clipped.std()), STD_GUARD)
    return dataclasses.replace(volume, values=standardized.astype(np.float32))
