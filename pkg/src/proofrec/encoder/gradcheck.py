"""Central finite-difference validation of the analytic gradients."""

from __future__ import annotations

import numpy as np

from proofrec.encoder.model import EncoderParameters


def grad_check(params: EncoderParameters, loss_fn, eps: float = 1e-5,
               n_coords: int = 4, seed: int = 0,
               tensor_names=None) -> float:
    """Max relative error between analytic and numeric partial derivatives.

    ``loss_fn(params, compute_grads=...)`` must return ``(loss, grads)``.
    Samples ``n_coords`` coordinates of every (selected) parameter tensor and
    compares the analytic gradient against a central difference. Requires
    double precision.
    """
    _, grads = loss_fn(params, compute_grads=True)
    rng = np.random.default_rng(seed)
    names = sorted(tensor_names or params.tensors)
    worst = 0.0
    for name in names:
        tensor = params.tensors[name]
        flat = tensor.reshape(-1)
        gflat = grads[name].reshape(-1)
        for _ in range(min(n_coords, flat.size)):
            i = int(rng.integers(flat.size))
            orig = flat[i]
            flat[i] = orig + eps
            hi, _ = loss_fn(params, compute_grads=False)
            flat[i] = orig - eps
            lo, _ = loss_fn(params, compute_grads=False)
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * eps)
            analytic = gflat[i]
            err = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-6)
            worst = max(worst, err)
    return worst
