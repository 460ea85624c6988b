"""scikit-learn style front end to the sampling campaign."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .census import ALL_INDICES, MINIMA_ONLY, CampaignSpec, run_campaign, run_sample
from .core import DEFAULT_TOL, Configuration, same_orbit
from .energy import EnergyParams


class CriticalPointCensus(BaseEstimator):
    """Find the symmetry types of critical points of ``n_disks`` disks.

    Parameters
    ----------
    n_disks : int
        Number of disks in the unit square.
    samples : int
        Random starts used by :meth:`fit` when no start points are given.
    seed : int
        Base seed; sample ``k`` is drawn from ``seed + k``.
    pipeline : {"minima_only", "all_indices"}
        Steepest descent on the energy, or conjugate gradient on its squared
        gradient (critical points of every index).
    hardness : float
        Exponent of the softened energy.
    eps : float or None
        Relative bond tolerance; ``None`` picks the pipeline default.
    tol : float
        Symmetry matching tolerance.
    n_jobs : int
        Worker processes.

    Attributes
    ----------
    census_ : Census
    types_ : list of CriticalType
    radii_ : ndarray of shape (n_types,)
    indices_ : ndarray of shape (n_types,)
    """

    def __init__(self, n_disks=5, samples=1000, seed=0, pipeline=MINIMA_ONLY, hardness=50.0, eps=None, tol=DEFAULT_TOL, n_jobs=1):
        self.n_disks = n_disks
        self.samples = samples
        self.seed = seed
        self.pipeline = pipeline
        self.hardness = hardness
        self.eps = eps
        self.tol = tol
        self.n_jobs = n_jobs

    def _spec(self, samples):
        if self.pipeline not in (MINIMA_ONLY, ALL_INDICES):
            raise ValueError(f"unknown pipeline {self.pipeline!r}")
        return CampaignSpec(
            n=int(self.n_disks),
            samples=int(samples),
            base_seed=int(self.seed),
            pipeline=self.pipeline,
            params=EnergyParams(float(self.hardness)),
            eps=self.eps,
            tol=float(self.tol),
        )

    def _validate_starts(self, X):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 2 * self.n_disks:
            raise ValueError(f"X must have {2 * self.n_disks} columns, got {X.shape[1]}")
        if X.min() <= 0.0 or X.max() >= 1.0:
            raise ValueError("start coordinates must lie strictly inside (0, 1)")
        return X

    def fit(self, X=None, y=None):
        """Run the campaign from the rows of ``X`` or from seeded random starts."""
        if X is None:
            self.census_ = run_campaign(self._spec(self.samples), workers=self.n_jobs)
        else:
            X = self._validate_starts(X)
            self.census_ = run_campaign(self._spec(X.shape[0]), workers=self.n_jobs, starts=X)
        self.types_ = list(self.census_.types)
        self.radii_ = np.array([t.radius for t in self.types_])
        self.indices_ = np.array([t.index for t in self.types_], dtype=int)
        return self

    def predict(self, X) -> np.ndarray:
        """Type number reached from each start (``-1`` if none matches)."""
        check_is_fitted(self, "types_")
        X = self._validate_starts(X)
        spec = self._spec(X.shape[0])
        out = np.full(X.shape[0], -1, dtype=int)
        for k, x0 in enumerate(X):
            res = run_sample(spec, k, x0)
            if res.status != "ok":
                continue
            c = Configuration.from_flat(res.point)
            for j, t in enumerate(self.types_):
                ref = t.softened if t.softened is not None else t.config
                if same_orbit(c, ref, 1e-3):
                    out[k] = j
                    break
        return out

    def transform(self, X) -> np.ndarray:
        """Hardened radius and index of the type reached from each start.

        Rows whose start reaches no known type are ``nan``.
        """
        labels = self.predict(X)
        out = np.full((len(labels), 2), np.nan)
        ok = labels >= 0
        out[ok, 0] = self.radii_[labels[ok]]
        out[ok, 1] = self.indices_[labels[ok]]
        return out
