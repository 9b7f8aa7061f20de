import logging
from typing import Callable, Optional, Sequence

import numpy as np

from numerics.tensor import Tensor, no_grad
from utils.errors import ContractError

logger = logging.getLogger(__name__)

_DENOM_FLOOR = 1e-12

# offsets and weights of the central stencils, derivative = sum(w * f(x + k*h)) / h
_STENCILS = {
    2: ((1, 0.5), (-1, -0.5)),
    4: ((2, -1.0 / 12.0), (1, 8.0 / 12.0), (-1, -8.0 / 12.0), (-2, 1.0 / 12.0)),
}


def _as_float(value) -> float:
    return value.item() if isinstance(value, Tensor) else float(value)


def finite_diff_check(
    f: Callable[[Sequence[Tensor]], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
    points: int = 2,
    max_coords_per_param: Optional[int] = None,
    seed: int = 0,
    names: Optional[Sequence[str]] = None,
) -> float:
    """
    Compare backward() against central finite differences.

    Args:
        f: deterministic function of ``params`` returning a scalar tensor
        params: leaves to check; their ``grad`` is reset before and after
        h: finite-difference step
        points: 2 for the classic central difference, 4 for the fourth-order
            central stencil (truncation O(h^4), so a larger h keeps round-off low)
        max_coords_per_param: check a seeded random subset of coordinates per
            tensor instead of all of them (every tensor is still visited)
        seed: seed for the coordinate subset
        names: optional labels used when logging the worst coordinate

    Returns:
        max over checked coordinates of |a - n| / max(|a|, |n|, 1e-12)
    """
    if points not in _STENCILS:
        raise ContractError(f"unsupported stencil of {points} points; expected one of {sorted(_STENCILS)}")
    stencil = _STENCILS[points]
    for p in params:
        p.zero_grad()
    loss = f(params)
    if isinstance(loss, Tensor) and loss.requires_grad:
        loss.backward()
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]
    for p in params:
        p.zero_grad()

    rng = np.random.default_rng(seed)
    worst, worst_at = 0.0, None
    for i, p in enumerate(params):
        p.data = np.ascontiguousarray(p.data)
        flat = p.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords_per_param is not None and flat.size > max_coords_per_param:
            coords = np.sort(rng.choice(flat.size, size=max_coords_per_param, replace=False))
        for c in coords:
            original = flat[c]
            numeric = 0.0
            with no_grad():
                for offset, weight in stencil:
                    flat[c] = original + offset * h
                    numeric += weight * _as_float(f(params))
            flat[c] = original
            numeric /= h
            exact = float(analytic[i].reshape(-1)[c])
            err = abs(exact - numeric) / max(abs(exact), abs(numeric), _DENOM_FLOOR)
            if err > worst:
                worst, worst_at = err, (names[i] if names else i, int(c), exact, numeric)
    if worst_at is not None:
        logger.debug("Worst gradient coordinate %s: rel err %.3e", worst_at, worst)
    return worst
