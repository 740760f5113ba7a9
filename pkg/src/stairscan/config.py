"""Run configuration: every tunable of the detection pipeline in one place."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import InvalidConfigError


@dataclass(frozen=True)
class StairThresholds:
    """Admissible stair geometry for linking two lines into a stair.

    h: vertical rise between the lines' mean heights [m].
    d: horizontal run between the lines along their common normal [m].
    phi: slope atan(h/d) [deg].
    alpha_tol: maximum line-direction difference [deg].
    min_stairs: minimum chain length accepted as a staircase.
    """

    h_min: float = 0.11
    h_max: float = 0.30
    d_min: float = 0.15
    d_max: float = 0.45
    phi_min: float = 25.0
    phi_max: float = 60.0
    alpha_tol: float = 10.0
    min_stairs: int = 4

    def validate(self) -> None:
        if not 0 < self.h_min < self.h_max:
            raise InvalidConfigError("stair: need 0 < h_min < h_max")
        if not 0 < self.d_min < self.d_max:
            raise InvalidConfigError("stair: need 0 < d_min < d_max")
        if not 0 < self.phi_min < self.phi_max < 90:
            raise InvalidConfigError("stair: need 0 < phi_min < phi_max < 90")
        if not 0 < self.alpha_tol <= 90:
            raise InvalidConfigError("stair: need 0 < alpha_tol <= 90")
        if int(self.min_stairs) != self.min_stairs or self.min_stairs < 2:
            raise InvalidConfigError("stair: min_stairs must be an integer >= 2")


@dataclass(frozen=True)
class MergeThresholds:
    """Tolerances for deciding that two detected stairs are the same stair."""

    h_tol: float = 0.05
    d_tol: float = 0.05
    alpha_tol: float = 10.0

    def validate(self) -> None:
        if self.h_tol <= 0 or self.d_tol <= 0:
            raise InvalidConfigError("merge: h_tol and d_tol must be positive")
        if not 0 < self.alpha_tol <= 90:
            raise InvalidConfigError("merge: need 0 < alpha_tol <= 90")


@dataclass(frozen=True)
class RunConfig:
    """End-to-end pipeline parameters.

    leaf: voxel edge for downsampling (also the top-surface cell) [m].
    z_res: polar grid row height [m].
    theta_bins: polar grid azimuth bins over 360°.
    d_p: split distance for line extraction; also the blocking-line margin [m].
    n_min: minimum points per extracted line.
    sigma: per-point noise std-dev assumed by the line fit [m].
    chi2: Mahalanobis gate for fusing collinear lines.
    min_fill: minimum fraction of a line's spanned azimuth columns that must
        carry a grid return near its fit (own or adjacent row); sparser
        chains are grid artifacts.
    ground_z: height of the supporting ground plane [m].
    band: half-height of the ground band around ground_z [m].
    """

    leaf: float = 0.025
    z_res: float = 0.025
    theta_bins: int = 720
    d_p: float = 0.03
    n_min: int = 4
    sigma: float = 0.0125
    chi2: float = 5.99
    min_fill: float = 0.45
    ground_z: float = 0.0
    band: float = 0.08
    stair: StairThresholds = field(default_factory=StairThresholds)
    merge: MergeThresholds = field(default_factory=MergeThresholds)

    def validate(self) -> None:
        for name in ("leaf", "z_res", "d_p", "sigma", "chi2", "min_fill"):
            if getattr(self, name) <= 0:
                raise InvalidConfigError(f"{name} must be positive")
        if int(self.theta_bins) != self.theta_bins or self.theta_bins < 8:
            raise InvalidConfigError("theta_bins must be an integer >= 8")
        if int(self.n_min) != self.n_min or self.n_min < 2:
            raise InvalidConfigError("n_min must be an integer >= 2")
        if self.band < 0:
            raise InvalidConfigError("band must be non-negative")
        self.stair.validate()
        self.merge.validate()


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise InvalidConfigError(f"{where}: expected an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise InvalidConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in ("stair", "merge"):
            sub = StairThresholds if key == "stair" else MergeThresholds
            kwargs[key] = _build(sub, value, f"{where}.{key}")
        elif not isinstance(value, (int, float)) or isinstance(value, bool):
            raise InvalidConfigError(f"{where}.{key}: expected a number")
        else:
            kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    """Strict construction: unknown keys or out-of-range values raise
    InvalidConfigError."""
    cfg = _build(RunConfig, data, "config")
    cfg.validate()
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data)


def save_config(cfg: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
