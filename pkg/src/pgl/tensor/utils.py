"""
Tools for validating arguments handed to tensor operations.
"""

from ..exceptions import ShapeError

AXIS_NAMES = ("depth", "height", "width")


def as_triple(value, name, minimum=None):
    """
    Ensure that a valid per-axis triple was provided.

    Parameters
    ----------
    value : int or sequence of int
        A single value (applied to every spatial axis) or one value per
        axis, in depth, height, width order.
    name : str
        The name of the argument, used in error messages.
    minimum : int, optional
        The smallest value permitted on any axis.

    Returns
    -------
    triple : tuple of int
        The value expanded to three integers.
    """
    if isinstance(value, int):
        triple = (value, value, value)
    else:
        triple = tuple(int(_) for _ in value)
    if len(triple) != 3:
        raise ValueError(
            f"Provide a valid '{name}'—either one integer or three, not {value!r}."
        )
    if minimum is not None:
        for axis, item in zip(AXIS_NAMES, triple):
            if item < minimum:
                raise ValueError(
                    f"The {axis} value of '{name}' must be at least {minimum}, not {item}."
                )
    return triple


def check_same_shape(a, b, operation):
    """
    Ensure that two arrays share one shape.

    Parameters
    ----------
    a, b : numpy.ndarray or pgl.tensor.core.Tensor
        The operands.
    operation : str
        The name of the operation, used in error messages.
    """
    if tuple(a.shape) != tuple(b.shape):
        for axis, (size_a, size_b) in enumerate(zip(a.shape, b.shape)):
            if size_a != size_b:
                raise ShapeError(
                    f"Operands of '{operation}' differ on axis {axis}: "
                    f"{size_a} vs {size_b} (shapes {tuple(a.shape)} and {tuple(b.shape)})."
                )
        raise ShapeError(
            f"Operands of '{operation}' differ in rank: "
            f"{tuple(a.shape)} and {tuple(b.shape)}."
        )


def check_rank(array, rank, operation, layout="NCDHW"):
    """Ensure that an operand has the expected number of dimensions."""
    if array.ndim != rank:
        raise ShapeError(
            f"'{operation}' expects a rank-{rank} ({layout}) operand, "
            f"not shape {tuple(array.shape)}."
        )
