"""Finite-difference verification of reverse-mode gradients."""

from dataclasses import dataclass
from typing import Callable, Iterable, List, Tuple

import numpy as np

from ..errors import DomainError, EvaluationError, NonFiniteError
from .tensor import Parameter, Tensor, backward, compute_precision, zero_grads

DEFAULT_EPS = 1e-3
RELATIVE_FLOOR = 1e-8


@dataclass(frozen=True)
class GradCheckReport:
    """Worst coordinate found by a central-difference comparison."""

    max_relative_error: float
    worst_index: int
    analytic: float
    numeric: float

    def to_dict(self) -> dict:
        return {
            'max_relative_error': self.max_relative_error,
            'worst_index': self.worst_index,
            'analytic': self.analytic,
            'numeric': self.numeric,
        }


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """|a - n| / max(|a|, |n|, 1e-8), elementwise."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), RELATIVE_FLOOR)
    return np.abs(analytic - numeric) / scale


def _summarize(analytic: np.ndarray, numeric: np.ndarray) -> GradCheckReport:
    errors = relative_error(analytic, numeric)
    worst = int(np.argmax(errors))
    return GradCheckReport(
        max_relative_error=float(errors[worst]),
        worst_index=worst,
        analytic=float(analytic[worst]),
        numeric=float(numeric[worst]),
    )


def _evaluate(f: Callable[[Tensor], Tensor], point: np.ndarray, index: int) -> float:
    try:
        value = f(Tensor(point)).item()
    except NonFiniteError as exc:
        raise EvaluationError(f'Function is non-finite at perturbed coordinate {index}: {exc}', index=index)
    if not np.isfinite(value):
        raise EvaluationError(f'Function is non-finite at perturbed coordinate {index}', index=index)
    return value


def _central_differences(evaluate: Callable[[np.ndarray, int], float], base: np.ndarray, eps: float) -> np.ndarray:
    flat = base.reshape(-1)
    numeric = np.zeros(flat.size)
    for i in range(flat.size):
        plus = flat.copy()
        minus = flat.copy()
        plus[i] += eps
        minus[i] -= eps
        f_plus = evaluate(plus.reshape(base.shape), i)
        f_minus = evaluate(minus.reshape(base.shape), i)
        numeric[i] = (f_plus - f_minus) / (2.0 * eps)
    return numeric


def gradient_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = DEFAULT_EPS) -> GradCheckReport:
    """
    Compare the reverse-mode gradient of a scalar function with central differences.

    Parameters
    ----------
    f : Callable[[Tensor], Tensor]
        Function from a tensor shaped like ``x`` to a scalar tensor
    x : Tensor
        Evaluation point
    eps : float
        Perturbation size, must be positive

    Returns
    -------
    GradCheckReport
        Maximum relative error over all coordinates and where it occurred

    Raises
    ------
    EvaluationError
        If f is non-finite at a perturbed point; carries the coordinate index
    """
    if eps <= 0:
        raise DomainError(f'eps must be positive, got {eps}')
    with compute_precision(np.float64):
        base = x.data.astype(np.float64)
        leaf = Tensor(base, requires_grad=True)
        backward(f(leaf))
        analytic = np.zeros(base.size) if leaf.grad is None else leaf.grad.reshape(-1).astype(np.float64)
        numeric = _central_differences(lambda point, i: _evaluate(f, point, i), base, eps)
    return _summarize(analytic, numeric)


def check_parameters(
    loss_fn: Callable[[], Tensor], parameters: Iterable[Parameter], eps: float = DEFAULT_EPS
) -> List[Tuple[str, GradCheckReport]]:
    """
    Gradient-check a loss with respect to each parameter in turn.

    ``loss_fn`` rebuilds the graph from the current parameter values on every
    call. Parameter values are restored and gradients zeroed afterwards.

    Returns
    -------
    List[Tuple[str, GradCheckReport]]
        One report per parameter, in the given order
    """
    parameters = list(parameters)
    reports = []
    with compute_precision(np.float64):
        originals = [p.value for p in parameters]
        try:
            for p in parameters:
                p.value = Tensor(p.value.data.astype(np.float64), requires_grad=True)
                p.zero_grad()
            backward(loss_fn(), parameters)
            analytic = {p.name: p.gradient.reshape(-1).astype(np.float64) for p in parameters}

            for p in parameters:
                held = p.value

                def evaluate(point, index, p=p):
                    p.value = Tensor(point, requires_grad=True)
                    try:
                        value = loss_fn().item()
                    except NonFiniteError as exc:
                        raise EvaluationError(
                            f'Loss is non-finite when perturbing {p.name}[{index}]: {exc}', index=index
                        )
                    if not np.isfinite(value):
                        raise EvaluationError(f'Loss is non-finite when perturbing {p.name}[{index}]', index=index)
                    return value

                numeric = _central_differences(evaluate, held.data, eps)
                p.value = held
                reports.append((p.name, _summarize(analytic[p.name], numeric)))
        finally:
            for p, original in zip(parameters, originals):
                p.value = original
            zero_grads(parameters)
    return reports
