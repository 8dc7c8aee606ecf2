"""
Optimizers that update a parameter store in place from its gradients.
"""

import numpy as np

from ..exceptions import NumericalError

NORM_GUARD = 1e-12


class Optimizer:
    """
    A base class for momentum optimizers.

    Parameters
    ----------
    params : ParamStore
        The store to update.
    momentum : float
        The momentum coefficient.
    weight_decay : float
        The decoupled weight decay coefficient.
    frozen : tuple of str
        Name prefixes of parameters that are never updated.
    """

    def __init__(self, params, momentum=0.9, weight_decay=0.0, frozen=()):
        self.params = params
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.frozen = tuple(frozen)
        self.buffers = {
            name: np.zeros_like(tensor.data)
            for name, tensor in self._updated_items()
        }

    def _updated_items(self):
        for name, tensor in self.params.trainable_items():
            if not name.startswith(self.frozen):
                yield name, tensor

    def _check_gradients(self):
        for name, tensor in self._updated_items():
            if not np.all(np.isfinite(tensor.grad)):
                raise NumericalError(
                    f"The gradient of '{name}' contains non-finite values; the step was aborted."
                )

    def update_direction(self, name, weight, grad):
        raise NotImplementedError

    def step(self, lr):
        """Apply one update with learning rate `lr` (gradients are not reset)."""
        self._check_gradients()
        for name, tensor in self._updated_items():
            direction = self.update_direction(name, tensor.data, tensor.grad)
            buffer = self.buffers[name]
            buffer *= self.momentum
            buffer += direction
            tensor.data -= (lr * buffer).astype(tensor.dtype)

    def state_dict(self):
        return dict(self.buffers)

    def load_arrays(self, arrays):
        for name, buffer in self.buffers.items():
            if name in arrays:
                np.copyto(buffer, arrays[name])


class Sgd(Optimizer):
    """Stochastic gradient descent with momentum."""

    def update_direction(self, name, weight, grad):
        if self.weight_decay:
            return grad + self.weight_decay * weight
        return grad.copy()


class Lars(Optimizer):
    """
    Layer-wise adaptive rate scaling.

    Each non-exempt parameter's update ``g + weight_decay * w`` is scaled
    by a local rate ``trust * |w| / (|g| + weight_decay * |w| + 1e-12)`` before
    it enters the momentum buffer, so an all-zero weight never moves.
    Biases and normalization parameters are exempt: they take plain
    momentum SGD steps without decay.

    Parameters
    ----------
    params : ParamStore
        The store to update.
    momentum : float
        The momentum coefficient (default: 0.9).
    weight_decay : float
        The weight decay coefficient (default: 1.5e-6).
    trust : float
        The trust coefficient (default: 0.001).
    frozen : tuple of str
        Name prefixes of parameters that are never updated.
    """

    def __init__(self, params, momentum=0.9, weight_decay=1.5e-6, trust=0.001, frozen=()):
        super().__init__(params, momentum=momentum, weight_decay=weight_decay, frozen=frozen)
        self.trust = trust

    def local_rate(self, weight, grad):
        weight_norm = float(np.linalg.norm(weight))
        grad_norm = float(np.linalg.norm(grad))
        denominator = grad_norm + self.weight_decay * weight_norm + NORM_GUARD
        return self.trust * weight_norm / denominator

    def update_direction(self, name, weight, grad):
        if self.params.is_exempt(name):
            return grad.copy()
        return (grad + self.weight_decay * weight) * self.local_rate(weight, grad)
