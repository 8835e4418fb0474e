"""Experiment specifications and the mergeable result container.

An ExperimentSpec is a plain value: model, horizon, replication, seeds,
preset-specific options, and the external proof constants it should
record.  Its canonical JSON form is hashed into every output file so a
result can always be traced back to the exact spec that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from ..model import ConfigError, ModelConfig
from ..renorm.params import RenormParams

PRESETS = ("speed_curve", "rho_curve", "static_solomon", "block_tails",
           "coverage_probe", "constants_report", "single_run")

_NEED_RENORM = ("block_tails", "coverage_probe", "constants_report")


@dataclass(frozen=True)
class TheoremParameters:
    """Constants appearing in the quantitative statements.

    k, eps0 and eps1 parameterize thresholds this package evaluates.  The
    remaining entries originate in external arguments; they are recorded
    verbatim in manifests and consumed by the constants report, never
    derived here.  r_of_t is a free-form description of the radius
    function, kept as text for the same reason.
    """

    k: float = 1.0
    eps0: float = 0.01
    eps1: float = 0.1
    c4: float | None = None
    c5: float | None = None
    c6: float | None = None
    k4: float | None = None
    k20: float | None = None
    r_of_t: str | None = None
    r0: int | None = None
    mu0: float | None = None
    t0: float | None = None

    def __post_init__(self):
        if not 0.0 < self.eps0 < 1.0:
            raise ConfigError(f"eps0 must lie in (0, 1), got {self.eps0!r}")
        if not 0.0 < self.eps1 < 1.0:
            raise ConfigError(f"eps1 must lie in (0, 1), got {self.eps1!r}")
        if self.k <= 0.0:
            raise ConfigError(f"k must be positive, got {self.k!r}")

    def to_dict(self) -> dict:
        return {
            "k": self.k, "eps0": self.eps0, "eps1": self.eps1,
            "c4": self.c4, "c5": self.c5, "c6": self.c6,
            "k4": self.k4, "k20": self.k20, "r_of_t": self.r_of_t,
            "r0": self.r0, "mu0": self.mu0, "t0": self.t0,
        }

    @staticmethod
    def from_dict(obj: dict) -> "TheoremParameters":
        known = {f: obj[f] for f in TheoremParameters.__dataclass_fields__
                 if f in obj}
        extra = set(obj) - set(known)
        if extra:
            raise ConfigError(f"unknown theorem parameters: {sorted(extra)}")
        return TheoremParameters(**known)


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: preset, model, horizon, replication, options."""

    preset: str
    model: ModelConfig
    t: float
    replicas: int
    base_seed: int
    renorm: RenormParams | None = None
    theorem: TheoremParameters = field(default_factory=TheoremParameters)
    options: dict = field(default_factory=dict)
    out_dir: str | None = None

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {self.preset!r}; expected one of {PRESETS}")
        if not (self.t > 0.0):
            raise ConfigError(f"horizon must be positive, got {self.t!r}")
        if self.replicas < 1:
            raise ConfigError(
                f"need at least one replica, got {self.replicas}")
        if self.preset in _NEED_RENORM and self.renorm is None:
            raise ConfigError(
                f"preset {self.preset!r} needs block-scale parameters "
                "(renorm)")
        for key in self.options:
            if not isinstance(key, str):
                raise ConfigError("option keys must be strings")

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "preset": self.preset,
            "model": self.model.to_dict(),
            "t": self.t,
            "replicas": self.replicas,
            "base_seed": self.base_seed,
            "renorm": None if self.renorm is None else self.renorm.to_dict(),
            "theorem": self.theorem.to_dict(),
            "options": dict(sorted(self.options.items())),
            "out_dir": self.out_dir,
        }

    @staticmethod
    def from_dict(obj: dict) -> "ExperimentSpec":
        try:
            preset = obj["preset"]
            model = ModelConfig.from_dict(obj["model"])
            t = float(obj["t"])
            replicas = int(obj["replicas"])
            base_seed = int(obj["base_seed"])
        except KeyError as exc:
            raise ConfigError(f"missing spec key: {exc.args[0]}") from exc
        renorm = obj.get("renorm")
        if renorm is not None:
            renorm = RenormParams.from_dict(renorm)
        theorem = TheoremParameters.from_dict(obj.get("theorem", {}))
        return ExperimentSpec(
            preset=preset, model=model, t=t, replicas=replicas,
            base_seed=base_seed, renorm=renorm, theorem=theorem,
            options=dict(obj.get("options", {})),
            out_dir=obj.get("out_dir"))

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, **kw) -> "ExperimentSpec":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


OK, BREACHED, TRUNCATED = "ok", "breach", "truncated"
_STATUSES = (OK, BREACHED, TRUNCATED)


@dataclass(frozen=True, order=True)
class ReplicaRecord:
    """One replica's numeric payload inside a named experiment cell."""

    key: str
    index: int
    status: str
    values: tuple

    def __post_init__(self):
        if self.status not in _STATUSES:
            raise ValueError(f"unknown status {self.status!r}")


@dataclass(frozen=True)
class RunResult:
    """Sorted per-replica records plus the column names of their payload.

    Merging two results concatenates and re-sorts the records, so the
    operation is associative and commutative; any split of the replica
    set across workers aggregates to the same value.
    """

    kind: str
    columns: tuple
    records: tuple

    def __post_init__(self):
        object.__setattr__(self, "records",
                           tuple(sorted(self.records)))
        seen = set()
        for rec in self.records:
            if (rec.key, rec.index) in seen:
                raise ValueError(
                    f"duplicate replica {(rec.key, rec.index)}")
            seen.add((rec.key, rec.index))

    def merge(self, other: "RunResult") -> "RunResult":
        if self.kind != other.kind:
            raise ValueError(
                f"cannot merge {self.kind!r} with {other.kind!r}")
        if self.columns != other.columns:
            raise ValueError("cannot merge results with different columns")
        return RunResult(self.kind, self.columns,
                         self.records + other.records)

    def keys(self) -> list:
        out = []
        for rec in self.records:
            if rec.key not in out:
                out.append(rec.key)
        return out

    def cell(self, key: str) -> list:
        return [rec for rec in self.records if rec.key == key]

    def counts(self, key: str | None = None) -> dict:
        recs = self.records if key is None else self.cell(key)
        n_ok = sum(1 for r in recs if r.status == OK)
        n_b = sum(1 for r in recs if r.status == BREACHED)
        n_t = sum(1 for r in recs if r.status == TRUNCATED)
        return {"replicas": len(recs), "ok": n_ok, "breaches": n_b,
                "truncations": n_t}

    def breach_rate(self) -> float:
        c = self.counts()
        return c["breaches"] / c["replicas"] if c["replicas"] else 0.0
