"""
Helper tools to improve testing of differentiable operations.
"""

import textwrap
from pprint import pformat

import numpy as np
import pytest

from pgl.tensor.core import Tensor, backward


class TestGradients:
    """A base class for testing analytic gradients against finite differences."""

    step = 1e-5
    tolerance = 1e-5

    @pytest.fixture(autouse=True)
    def _get_rng(self):
        # Every test in a gradient suite draws from the same seeded stream
        self._rng = np.random.default_rng(20210923)

    @staticmethod
    def _format_gradient_comparison(analytic, numerical):
        default_indent = "\t\t       "
        wrap_kwargs = {
            "initial_indent": default_indent,
            "subsequent_indent": f"{default_indent} ",
        }
        analytic_string = textwrap.fill(pformat(analytic.ravel()[:8].tolist()), **wrap_kwargs)
        numerical_string = textwrap.fill(
            pformat(numerical.ravel()[:8].tolist()), **wrap_kwargs
        )
        return (
            f"\n\t       analytic:\n{analytic_string}"
            f"\n\t      numerical:\n{numerical_string}"
        )

    @staticmethod
    def relative_error(analytic, numerical):
        """Return the largest deviation, relative to the largest magnitude."""
        magnitude = max(np.abs(analytic).max(), np.abs(numerical).max(), 1e-12)
        return np.abs(analytic - numerical).max() / magnitude

    @staticmethod
    def numerical_gradient(function, arrays, index, step):
        """
        Estimate a gradient with central finite differences.

        Parameters
        ----------
        function : callable
            Maps a list of NumPy arrays to a float.
        arrays : list of numpy.ndarray
            The point at which to differentiate (left unmodified).
        index : int
            The position of the array to differentiate with respect to.
        step : float
            The finite-difference step.
        """
        target = arrays[index]
        gradient = np.zeros_like(target)
        for position in np.ndindex(*target.shape):
            original = target[position]
            target[position] = original + step
            plus = function(arrays)
            target[position] = original - step
            minus = function(arrays)
            target[position] = original
            gradient[position] = (plus - minus) / (2 * step)
        return gradient

    def projection_for(self, shape):
        """Draw fixed random weights that reduce an output to a scalar."""
        return self._rng.standard_normal(shape)

    def assert_gradients_match(self, operation, arrays, tolerance=None, wrt=None):
        """
        Compare analytic and numerical gradients of an operation.

        The operation's output is reduced to a scalar by a fixed random
        projection so that every output element contributes.

        Parameters
        ----------
        operation : callable
            Maps tensors to a tensor.
        arrays : list of numpy.ndarray
            64-bit inputs to the operation.
        tolerance : float, optional
            The largest accepted relative error (default: `self.tolerance`).
        wrt : sequence of int, optional
            The inputs to check (default: all of them).
        """
        tolerance = self.tolerance if tolerance is None else tolerance
        arrays = [np.array(array, dtype=np.float64) for array in arrays]
        wrt = range(len(arrays)) if wrt is None else wrt
        tensors = [Tensor(array.copy(), requires_grad=True) for array in arrays]
        output = operation(*tensors)
        projection = self.projection_for(output.shape)
        loss = (output * Tensor(projection)).sum() if output.shape else output
        backward(loss)

        def evaluate(values):
            result = operation(*(Tensor(value) for value in values)).data
            return float((result * projection).sum()) if result.shape else float(result)

        for index in wrt:
            numerical = self.numerical_gradient(evaluate, arrays, index, self.step)
            analytic = tensors[index].grad
            error = self.relative_error(analytic, numerical)
            assert error <= tolerance, (
                f"The gradient of input {index} does not match finite differences"
                f"\n\trelative error: {error:.3e} (tolerance {tolerance:.1e})"
                f"{self._format_gradient_comparison(analytic, numerical)}"
            )

    @staticmethod
    def assert_close(actual, expected, atol=1e-6):
        actual = np.asarray(getattr(actual, "data", actual))
        expected = np.asarray(getattr(expected, "data", expected))
        assert actual.shape == expected.shape, (
            "The shape of the result does not match the expectation"
            f"\n\texpected shape: {expected.shape}"
            f"\n\t  actual shape: {actual.shape}"
        )
        deviation = np.abs(actual - expected).max() if actual.size else 0.0
        assert deviation <= atol, (
            "The result deviates from the expectation"
            f"\n\tlargest deviation: {deviation:.3e} (tolerance {atol:.1e})"
        )
