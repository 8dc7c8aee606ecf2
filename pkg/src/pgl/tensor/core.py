"""
A dense tensor type and the reverse-mode machinery that differentiates it.
"""

import logging
import os
import threading
from contextlib import contextmanager

import numpy as np

from ..exceptions import NumericalError, ShapeError

logger = logging.getLogger(__name__)

FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

_debug = os.environ.get("PGL_DEBUG", "0") not in ("", "0")
_state = threading.local()


def set_debug(enabled):
    """Turn finite-value assertions after every forward operation on or off."""
    global _debug
    _debug = bool(enabled)


def is_grad_enabled():
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad():
    """
    Evaluate operations without recording them for differentiation.

    The setting is local to the current thread, so a prefetching worker
    never disables recording for the training step.
    """
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


class Function:
    """
    A differentiable operation.

    Subclasses implement `forward`, which receives the NumPy arrays of
    the input tensors (plus keyword arguments) and may save whatever it
    needs on `self`, and `backward`, which receives the gradient with
    respect to the output and returns one gradient array (or `None`)
    per input tensor.

    Attributes
    ----------
    inputs : tuple of Tensor
        The tensors the operation was applied to.
    stop_gradient : bool
        When set, the operation passes no gradient to its inputs.
    """

    stop_gradient = False

    def __init__(self, *inputs):
        self.inputs = inputs

    def forward(self, *arrays, **kwargs):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs, **kwargs):
        """
        Run the operation and record it when any input is tracked.

        Parameters
        ----------
        *inputs : Tensor
            The tensors the operation consumes.
        **kwargs :
            Non-tensor arguments forwarded to `forward`.

        Returns
        -------
        output : Tensor
            The result, carrying a reference to this operation when
            gradients must flow through it.
        """
        function = cls(*inputs)
        data = function.forward(*(tensor.data for tensor in inputs), **kwargs)
        if _debug:
            _assert_finite(cls.__name__, inputs, data)
        tracked = (
            is_grad_enabled()
            and not cls.stop_gradient
            and any(tensor.requires_grad for tensor in inputs)
        )
        return Tensor(data, requires_grad=tracked, creator=function if tracked else None)


def _assert_finite(name, inputs, data):
    inputs_finite = all(np.all(np.isfinite(tensor.data)) for tensor in inputs)
    if inputs_finite and not np.all(np.isfinite(data)):
        raise NumericalError(f"The '{name}' operation produced non-finite values.")


class Tensor:
    """
    A dense N-dimensional array that can take part in differentiation.

    Data is stored as a contiguous 32-bit or 64-bit floating point
    NumPy array. Tracked leaf tensors (parameters) own a gradient buffer
    of identical shape; intermediate results receive their gradients only
    transiently, while a backward pass runs.

    Parameters
    ----------
    data : array_like
        The values. Non-floating inputs are converted to 32-bit floats.
    requires_grad : bool
        Whether gradients should be computed for this tensor.
    creator : Function, optional
        The operation that produced this tensor (`None` for leaves).
    dtype : numpy.dtype, optional
        An explicit floating point type.
    """

    def __init__(self, data, requires_grad=False, creator=None, dtype=None):
        array = np.asarray(data)
        if dtype is None:
            dtype = array.dtype if array.dtype in FLOAT_DTYPES else np.float32
        self.data = np.ascontiguousarray(array, dtype=dtype)
        self.requires_grad = bool(requires_grad)
        self.creator = creator
        self.grad = None
        if self.requires_grad and creator is None:
            self.grad = np.zeros_like(self.data)

    def __repr__(self):
        tracking = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{tracking})"

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        return self.data.item()

    def numpy(self):
        return self.data

    def zero_grad(self):
        if self.grad is not None:
            self.grad.fill(0)

    def detach(self):
        """Return an untracked tensor sharing this tensor's values."""
        return Tensor(self.data, requires_grad=False)

    def backward(self):
        backward(self)

    def __add__(self, other):
        from .ops import add, add_scalar

        if isinstance(other, Tensor):
            return add(self, other)
        return add_scalar(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from .ops import add_scalar, subtract

        if isinstance(other, Tensor):
            return subtract(self, other)
        return add_scalar(self, -other)

    def __rsub__(self, other):
        from .ops import add_scalar, scale

        return add_scalar(scale(self, -1.0), other)

    def __mul__(self, other):
        from .ops import multiply, scale

        if isinstance(other, Tensor):
            return multiply(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from .ops import divide, scale

        if isinstance(other, Tensor):
            return divide(self, other)
        return scale(self, 1.0 / other)

    def __neg__(self):
        from .ops import scale

        return scale(self, -1.0)

    def sum(self):
        from .ops import total

        return total(self)

    def mean(self):
        from .ops import mean

        return mean(self)


class Tape:
    """
    An ordered record of the operation nodes leading to one output.

    Nodes are stored in topological order: every node's inputs precede
    it. A tape is built for (and owned by) a single backward pass.

    Parameters
    ----------
    nodes : list of Tensor
        Non-leaf tensors, each carrying the operation that produced it.
    """

    def __init__(self, nodes):
        self.nodes = nodes

    def __len__(self):
        return len(self.nodes)

    @classmethod
    def record(cls, output):
        """Collect every tracked operation reachable from `output`."""
        nodes = []
        visited = set()
        stack = [(output, False)]
        # Iterative post-order traversal (deep networks exceed the recursion limit)
        while stack:
            tensor, expanded = stack.pop()
            if id(tensor) in visited or tensor.creator is None:
                continue
            if expanded:
                visited.add(id(tensor))
                nodes.append(tensor)
                continue
            stack.append((tensor, True))
            for parent in reversed(tensor.creator.inputs):
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return cls(nodes)

    def backward(self, output, grad):
        """
        Propagate `grad` (the gradient with respect to `output`) backwards.

        Leaf tensors accumulate into their gradient buffers; gradients of
        intermediate tensors live only for the duration of this call.
        """
        pending = {id(output): grad}
        for tensor in reversed(self.nodes):
            upstream = pending.pop(id(tensor), None)
            function = tensor.creator
            if upstream is None or function.stop_gradient:
                continue
            input_grads = function.backward(upstream)
            if not isinstance(input_grads, tuple):
                input_grads = (input_grads,)
            for parent, parent_grad in zip(function.inputs, input_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                parent_grad = np.asarray(parent_grad, dtype=parent.dtype)
                if parent.creator is None:
                    if parent.grad is None:
                        parent.grad = np.zeros_like(parent.data)
                    parent.grad += parent_grad
                elif id(parent) in pending:
                    pending[id(parent)] = pending[id(parent)] + parent_grad
                else:
                    pending[id(parent)] = parent_grad
        if output.creator is None and output.requires_grad:
            output.grad += grad


def backward(loss):
    """
    Compute gradients of a scalar loss with respect to tracked leaves.

    Repeated calls accumulate into the leaves' gradient buffers until
    they are reset (see `Tensor.zero_grad`).

    Parameters
    ----------
    loss : Tensor
        A single-element tensor produced by tracked operations.
    """
    if loss.size != 1:
        raise ShapeError(
            f"Gradients can only be computed for a scalar loss, not shape {loss.shape}."
        )
    if not loss.requires_grad:
        logger.debug("Backward called on an untracked loss; nothing to do.")
        return
    tape = Tape.record(loss)
    tape.backward(loss, np.ones_like(loss.data))
