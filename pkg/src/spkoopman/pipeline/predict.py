"""Multi-step prediction by linear evolution of eigenfunctions."""

from dataclasses import dataclass

import numpy as np

__all__ = ["Prediction", "predict"]


@dataclass(frozen=True)
class Prediction:
    states: np.ndarray
    imag_residual: float
    dt: float

    @property
    def times(self):
        return self.dt * np.arange(self.states.shape[0])


def predict(model, x0, horizon, dt=None):
    """Predict ``horizon + 1`` states ``x(t_m)``, ``m = 0..horizon``.

    ``x(t_m) = Re sum_i phi_i(x0) E_i(t_m) b_i`` with ``E`` the model's
    evolution factors (``exp(mu t)`` or integer powers of ``lambda``). The
    largest imaginary part discarded by ``Re`` is returned alongside.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if dt is None:
        dt = model.dt
    if dt is None:
        raise ValueError("a sampling interval is required for prediction")
    phi0 = model.eigenfunctions(np.asarray(x0, dtype=float).reshape(1, -1))[0]
    E = model.evolution(int(horizon) + 1, dt)
    Z = (E * phi0) @ model.modes
    return Prediction(
        states=Z.real.copy(),
        imag_residual=float(np.max(np.abs(Z.imag), initial=0.0)),
        dt=float(dt),
    )
