import numpy as np

from ar1ess.models import ObservationModel


class FlatModel(ObservationModel):
    """Likelihood identically one: the posterior is the prior (used for invariance tests)."""

    def __init__(self, T: int):
        self.T = T

    def loglik_terms(self, s_states, times):
        return np.zeros(np.shape(s_states))

    def loglik_sum(self, s_1t, **overrides):
        return 0.0


class GaussianObsModel(ObservationModel):
    """y_t ~ N(s_t, tau2): conjugate-style toy likelihood for sanity checks."""

    def __init__(self, y, tau2=0.25):
        self.y = np.asarray(y, dtype=float)
        self.T = self.y.size
        self.tau2 = tau2

    def loglik_terms(self, s_states, times):
        d = self.y[np.asarray(times) - 1] - s_states
        return -0.5 * d * d / self.tau2

    def loglik_sum(self, s_1t, **overrides):
        d = self.y - s_1t
        return float(-0.5 * np.sum(d * d) / self.tau2)
