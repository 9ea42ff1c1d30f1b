from collections.abc import Callable, Sequence

import numpy as np

from .tensor import Graph, Parameter, Tensor2

LossFn = Callable[[Graph], Tensor2]


def relative_error(analytic: float, numeric: float, floor: float = 1e-4) -> float:
    return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), floor)


def gradient_check(
    loss_fn: LossFn,
    params: Sequence[Parameter],
    samples: int,
    rng: np.random.Generator,
    h: float = 1e-5,
) -> float:
    """Largest relative error between backward and central differences.

    ``samples`` scalar entries are drawn uniformly over all parameter entries.
    ``loss_fn`` must build the loss on the graph it is given and be a pure
    function of the parameter values.
    """
    for p in params:
        p.zero_grad()
    g = Graph()
    g.backward(loss_fn(g))
    sizes = np.array([p.data.size for p in params])
    picks = rng.choice(int(sizes.sum()), size=min(samples, int(sizes.sum())), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    worst = 0.0
    for flat in np.sort(picks):
        which = int(np.searchsorted(offsets, flat, side="right") - 1)
        p, i = params[which], int(flat - offsets[which])
        view = p.data.reshape(-1)
        original = view[i]
        view[i] = original + h
        plus = loss_fn(Graph()).item()
        view[i] = original - h
        minus = loss_fn(Graph()).item()
        view[i] = original
        numeric = (plus - minus) / (2.0 * h)
        worst = max(worst, relative_error(float(p.grad.reshape(-1)[i]), numeric))
    return worst
