from fractions import Fraction

from config.configuration import ScheduleConfig
from masking.apportion import exact
from utils.errors import ContractError


def schedule_alphas(u: float, schedule: ScheduleConfig) -> tuple[float, float]:
    """
    Piecewise-linear (alpha_I, alpha_S) at training fraction u.

    Values at breakpoints are returned exactly. Interpolation runs on exact
    rationals so midpoints such as u=0.30 land on 0.5 without drift.
    """
    if not 0.0 <= u <= 1.0:
        raise ContractError(f"training fraction must lie in [0, 1], got {u}")
    points = schedule.resolved()
    at = [bp for bp in points if bp[0] == u]
    if at:
        _, alpha_i, alpha_s = at[-1]
        return float(alpha_i), float(alpha_s)
    if u < points[0][0]:
        return float(points[0][1]), float(points[0][2])
    if u > points[-1][0]:
        return float(points[-1][1]), float(points[-1][2])
    for (u0, i0, s0), (u1, i1, s1) in zip(points, points[1:]):
        if u0 < u < u1:
            t = (exact(u) - exact(u0)) / (exact(u1) - exact(u0))
            alpha_i = _lerp(exact(i0), exact(i1), t)
            alpha_s = _lerp(exact(s0), exact(s1), t)
            if alpha_i + alpha_s > 1.0:
                alpha_s = 1.0 - alpha_i
            return alpha_i, alpha_s
    raise ContractError(f"no schedule segment covers u={u}")


def _lerp(a: Fraction, b: Fraction, t: Fraction) -> float:
    return float(a + (b - a) * t)
