"""
Reach-gated quadratic trajectory cost shared by every world
"""
import numpy as np

from ttpoe.schemas.world import CostWeights


def reached_indicator(dist2: np.ndarray, tol: float) -> np.ndarray:
    """
    r[:, h] is 1 until the first step whose goal distance is below tol, 0 from then on

    Args:
        dist2: (N, T) squared goal distances
        tol: Goal tolerance [m]
    """
    reached = dist2 < tol ** 2
    return (~np.logical_or.accumulate(reached, axis=1)).astype(np.float64)


def reach_gated_cost(
    states: np.ndarray,
    actions: np.ndarray,
    goal: np.ndarray,
    collided: np.ndarray,
    weights: CostWeights,
    tol: float,
    terminal_collision: bool = False
) -> np.ndarray:
    """
    sum_h r_h (w_goal |x_h - p|^2 + w_coll coll(x_h) + w_act |u_h|^2) + w_term r_H |x_H - p|^2

    Args:
        states: (N, H+1, d_x)
        actions: (N, H, d_u)
        goal: (d_x,) target point
        collided: (N, H+1) collision flags of the states
        weights: Cost weights of the task
        tol: Goal tolerance [m]
        terminal_collision: Also charge a collision of the final state

    Returns:
        (N,) nonnegative costs
    """
    horizon = actions.shape[1]
    dist2 = np.sum((states - goal) ** 2, axis=-1)
    r = reached_indicator(dist2, tol)
    stage = (
        weights.goal * dist2[:, :horizon]
        + weights.collision * collided[:, :horizon]
        + weights.action * np.sum(actions ** 2, axis=-1)
    )
    total = np.sum(r[:, :horizon] * stage, axis=1) + weights.terminal * r[:, horizon] * dist2[:, horizon]
    if terminal_collision:
        total += weights.collision * r[:, horizon] * collided[:, horizon]
    return total
