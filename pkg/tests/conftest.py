import numpy as np

from proxlqr import LqProblem, ProximalState


def random_prox(problem: LqProblem, seed: int, mu: float) -> ProximalState:
    """Random multiplier estimates so the shifted right-hand sides are exercised."""
    rng = np.random.default_rng(seed)
    zero = ProximalState.zero(problem, mu)
    return ProximalState(
        mu,
        [rng.uniform(-1, 1, v.shape[0]) for v in zero.lam_e],
        [rng.uniform(-1, 1, v.shape[0]) for v in zero.nu_e],
    )
