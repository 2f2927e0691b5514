"""scikit-learn style wrapper: ``fit`` solves the PDE, ``predict`` evaluates the policy."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .hjb_solver import GridConfig, SchemeConfig, solve
from .model import ModelParams, pension_params
from .policy import DomainError, PolicyFunction, reconstruct_value


class EndowmentPolicyEstimator(BaseEstimator):
    """Optimal investment policy for power utility with a stochastic endowment.

    Parameters
    ----------
    params : ModelParams, optional
        Model parameters; defaults to the 20-year pension example.
    grid_nt, grid_nz : int
        Number of time steps and z intervals.
    z_min, z_max : float
        Truncated range of the wealth-to-endowment ratio.
    log_grid : bool
        Geometric rather than uniform z spacing.
    tol_policy : float
        Howard iteration stopping tolerance (max control change).
    max_policy_iters : int
        Iteration cap per time step.
    drift : {"central", "upwind"}
        Drift discretisation.

    Attributes
    ----------
    surface_ : SolutionSurface
        Solved value and control grids.
    policy_ : PolicyFunction
        Interpolating feedback control.

    Examples
    --------
    >>> est = EndowmentPolicyEstimator(grid_nt=50, grid_nz=50).fit()
    >>> est.predict([[0.0, 25.0, 1.0]]).shape
    (1,)
    """

    def __init__(self, params: ModelParams | None = None, grid_nt: int = 400, grid_nz: int = 400,
                 z_min: float = 0.05, z_max: float = 50.0, log_grid: bool = False,
                 tol_policy: float = 1e-8, max_policy_iters: int = 50, drift: str = "central"):
        self.params = params
        self.grid_nt = grid_nt
        self.grid_nz = grid_nz
        self.z_min = z_min
        self.z_max = z_max
        self.log_grid = log_grid
        self.tol_policy = tol_policy
        self.max_policy_iters = max_policy_iters
        self.drift = drift

    def _configs(self):
        grid = GridConfig(self.grid_nt, self.grid_nz, self.z_min, self.z_max, self.log_grid)
        scheme = SchemeConfig(tol_policy=self.tol_policy, max_policy_iters=self.max_policy_iters,
                              drift=self.drift)
        return grid, scheme

    def fit(self, X=None, y=None):
        """Solve the reduced HJB equation.  ``X`` and ``y`` are ignored."""
        params = self.params if self.params is not None else pension_params()
        grid, scheme = self._configs()
        self.surface_ = solve(params, grid, scheme)
        self.policy_ = PolicyFunction(self.surface_)
        self.merton_ratio_ = self.policy_._far_field
        return self

    def _states(self, X):
        X = check_array(X, dtype=np.float64, ensure_2d=True)
        if X.shape[1] != 3:
            raise ValueError(f"expected rows of (t, x, y), got {X.shape[1]} columns")
        t, x, y = X.T
        if np.any(x <= 0) or np.any(y <= 0):
            raise DomainError("wealth and endowment must be strictly positive")
        T = self.surface_.params.T
        if np.any(t < 0) or np.any(t > T):
            raise DomainError(f"times must lie in [0, {T}]")
        return t, x, y

    def predict(self, X) -> np.ndarray:
        """Optimal risky proportion for each ``(t, x, y)`` row."""
        check_is_fitted(self, "surface_")
        t, x, y = self._states(X)
        out = np.empty(t.size)
        for tv in np.unique(t):
            m = t == tv
            out[m] = self.policy_(float(tv), x[m], y[m])
        return out

    def value(self, X) -> np.ndarray:
        """Value ``v(t, x, y)`` for each row; raises outside the solved z range."""
        check_is_fitted(self, "surface_")
        t, x, y = self._states(X)
        out = np.empty(t.size)
        for tv in np.unique(t):
            m = t == tv
            out[m] = reconstruct_value(self.surface_, float(tv), x[m], y[m])
        return out
