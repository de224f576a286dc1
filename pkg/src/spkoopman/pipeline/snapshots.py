"""Snapshot containers with normalization and train/validation/test striding."""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

__all__ = ["Normalization", "SnapshotSet", "fit_normalization", "normalize", "stride_split", "interleave"]


@dataclass(frozen=True)
class Normalization:
    """Per-component affine map ``x_norm = (x - shift) / scale``."""

    shift: np.ndarray
    scale: np.ndarray

    def apply(self, X):
        return (np.asarray(X) - self.shift) / self.scale

    def invert(self, Xn):
        return np.asarray(Xn) * self.scale + self.shift

    def to_dict(self):
        return {"shift": self.shift.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["shift"], dtype=float), np.asarray(d["scale"], dtype=float))


@dataclass(frozen=True)
class SnapshotSet:
    """States (and optionally time derivatives) with sampling metadata.

    ``dt`` is None for unordered point clouds; otherwise rows are uniformly
    spaced in time. ``normalization`` records the map that produced the
    stored (normalized) states, if any.
    """

    states: np.ndarray
    derivatives: Optional[np.ndarray] = None
    dt: Optional[float] = None
    normalization: Optional[Normalization] = None
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.states, dtype=float))
        if X.ndim != 2:
            raise ValueError("states must be a 2-D array")
        if not np.all(np.isfinite(X)):
            raise ValueError("states contain non-finite values")
        object.__setattr__(self, "states", X)
        if self.derivatives is not None:
            D = np.asarray(self.derivatives, dtype=float)
            if D.shape != X.shape:
                raise ValueError("derivatives must match the shape of states")
            object.__setattr__(self, "derivatives", D)
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def n_samples(self):
        return self.states.shape[0]

    @property
    def state_dim(self):
        return self.states.shape[1]

    @property
    def times(self):
        if self.dt is None:
            raise ValueError("point clouds carry no time axis")
        return self.dt * np.arange(self.n_samples)

    def take(self, index, dt=None, **prov):
        merged = dict(self.provenance)
        merged.update(prov)
        return replace(
            self,
            states=self.states[index],
            derivatives=None if self.derivatives is None else self.derivatives[index],
            dt=self.dt if dt is None else dt,
            provenance=merged,
        )


def fit_normalization(X):
    """Shift/scale mapping each column of ``X`` onto ``[-1, 1]``.

    Constant columns get unit scale (they map to zero).
    """
    X = np.asarray(X, dtype=float)
    lo, hi = X.min(axis=0), X.max(axis=0)
    half = 0.5 * (hi - lo)
    return Normalization(0.5 * (hi + lo), np.where(half > 0, half, 1.0))


def normalize(snap, norm=None):
    """Normalized copy of ``snap``; derivatives are rescaled consistently."""
    if snap.normalization is not None:
        raise ValueError("snapshot set is already normalized")
    norm = fit_normalization(snap.states) if norm is None else norm
    return replace(
        snap,
        states=norm.apply(snap.states),
        derivatives=None if snap.derivatives is None else snap.derivatives / norm.scale,
        normalization=norm,
    )


def stride_split(snap):
    """Even-odd style split: row ``i`` goes to train/val/test by ``i mod 3``.

    Each child trajectory is sampled at ``3 dt``.
    """
    if snap.dt is None:
        raise ValueError("stride_split needs a time-ordered trajectory")
    dt3 = 3.0 * snap.dt
    return tuple(
        snap.take(slice(k, None, 3), dt=dt3, split=name, stride_offset=k)
        for k, name in enumerate(("train", "val", "test"))
    )


def interleave(train, val, test):
    """Inverse of :func:`stride_split` on the state arrays."""
    M = train.n_samples + val.n_samples + test.n_samples
    out = np.empty((M, train.state_dim))
    out[0::3], out[1::3], out[2::3] = train.states, val.states, test.states
    return out
