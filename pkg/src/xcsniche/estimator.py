"""scikit-learn estimator wrapper around the single-step XCS learner."""

import random

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import Parameters
from .engine import EXPLORE, XCS, best_action, compute_prediction_array
from .envs import REWARD
from .niche import can, niche_stats


def _check_binary(X):
    if not np.isin(X, (0, 1)).all():
        raise ValueError("XCS expects binary features (0/1)")
    return X.astype(np.int8)


def _rows_to_ints(X):
    weights = 1 << np.arange(X.shape[1] - 1, -1, -1, dtype=object)
    return [int(v) for v in X.astype(object) @ weights]


class XCSClassifier(ClassifierMixin, BaseEstimator):
    """Accuracy-based learning classifier system for binary feature matrices.

    Training treats each sample as a single-step problem: a random row is shown,
    an action (class) is chosen at random and rewarded with 1000 when it equals
    the label, 0 otherwise. After ``n_iter`` learning problems, ``n_condense``
    further problems run with crossover and mutation switched off.

    Parameters mirror :class:`xcsniche.core.Parameters`; ``max_population`` is
    the numerosity budget N.

    Attributes
    ----------
    classes_ : ndarray of shape (n_classes,)
    xcs_ : XCS
        The trained learner, population in ``xcs_.population``.
    n_active_niches_ : int
        Distinct action-set stamps of experienced rules.
    mean_active_niches_ : float
        Mean size of the stamp layers across rule histories.
    """

    def __init__(self, n_iter=10000, n_condense=0, max_population=400, beta=0.2, alpha=0.1,
                 epsilon0=10.0, nu=5.0, theta_ga=25, chi=0.8, mu=0.04, theta_del=20, delta=0.1,
                 theta_sub=20, p_hash=0.33, do_ga_subsumption=True, do_as_subsumption=False,
                 history_size=None, random_state=None):
        self.n_iter = n_iter
        self.n_condense = n_condense
        self.max_population = max_population
        self.beta = beta
        self.alpha = alpha
        self.epsilon0 = epsilon0
        self.nu = nu
        self.theta_ga = theta_ga
        self.chi = chi
        self.mu = mu
        self.theta_del = theta_del
        self.delta = delta
        self.theta_sub = theta_sub
        self.p_hash = p_hash
        self.do_ga_subsumption = do_ga_subsumption
        self.do_as_subsumption = do_as_subsumption
        self.history_size = history_size
        self.random_state = random_state

    def _params(self):
        return Parameters(
            n=self.max_population, beta=self.beta, alpha=self.alpha, epsilon0=self.epsilon0,
            nu=self.nu, theta_ga=self.theta_ga, chi=self.chi, mu=self.mu,
            theta_del=self.theta_del, delta=self.delta, theta_sub=self.theta_sub,
            p_hash=self.p_hash, do_ga_subsumption=self.do_ga_subsumption,
            do_as_subsumption=self.do_as_subsumption, l_max=self.history_size,
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        check_classification_targets(y)
        X = _check_binary(X)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        rng = self.random_state if isinstance(self.random_state, random.Random) \
            else random.Random(self.random_state)
        self.xcs_ = XCS(X.shape[1], len(self.classes_), self._params(), rng)
        inputs = _rows_to_ints(X)
        labels = [int(v) for v in y_idx]
        for i in range(self.n_iter + self.n_condense):
            if i == self.n_iter:
                self.xcs_.condensing = True
            k = rng.randrange(len(inputs))
            label = labels[k]
            self.xcs_.single_step(inputs[k], lambda a: REWARD if a == label else 0, mode=EXPLORE)
        self.xcs_.condensing = False
        pop = self.xcs_.population
        self.n_active_niches_, self.mean_active_niches_, _ = niche_stats(pop)
        self.active_niche_ids_ = sorted(can(pop))
        return self

    def _prediction_arrays(self, X):
        check_is_fitted(self, "xcs_")
        X = _check_binary(check_array(X))
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        pop = list(self.xcs_.population)
        n_actions = len(self.classes_)
        out = []
        for x in _rows_to_ints(X):
            match_set = [cl for cl in pop if x & cl.care == cl.bits]
            if match_set:
                pa = compute_prediction_array(match_set, n_actions)
            else:
                pa = [None] * n_actions
            out.append(pa)
        return out

    def predict(self, X):
        """Class with the highest system prediction; the first class when nothing matches."""
        actions = []
        for pa in self._prediction_arrays(X):
            a = best_action(pa)
            actions.append(0 if a is None else a)
        return self.classes_[np.asarray(actions, dtype=int)]

    def decision_function(self, X):
        """System prediction per class (payoff units); NaN where no rule advocates the class."""
        return np.array(
            [[np.nan if v is None else v for v in pa] for pa in self._prediction_arrays(X)],
            dtype=float,
        )

    def population_dump(self):
        check_is_fitted(self, "xcs_")
        return self.xcs_.population.dumps()
