"""Run configuration: TOML file -> validated :class:`RunConfig`.

Example::

    seed = 7
    n_trials = 400000
    analyses = ["space1", "frequentism", "feasibility"]

    [model]
    kind = "quantum"              # lhv | lhv_deterministic | lhv_stochastic |
                                  # quantum | signaling | conspiracy
    angles = [0.0, 45.0, 22.5, -22.5]   # a, a', b, b' in degrees
    visibility = 1.0

    [interpretation]
    mode = "kolmogorov"
    spacelike_separated = true
    conditions_exhaustive = false

    [output]
    trials = "trials.csv"
    report = "report.json"

LHV-style models take either ``response_left`` / ``response_right`` (2 x K
nested lists of P(outcome = 1)) or ``response = "random"`` with
``response_seed``, ``lambda_cardinality`` and ``deterministic``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import tomli

from belllab.core import SettingSet
from belllab.models import DEFAULT_LAMBDA_CARDINALITY, ModelKind, ModelSpec, ResponseTable
from belllab.interpretation import ExperimentFlags, InterpretationMode

ANALYSES = ("space1", "space2", "frequentism", "feasibility")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class FrequentismParams:
    eps: float = 0.01
    tail_fraction: float = 0.2
    selection_eps: float = 0.02
    attribute: tuple[int, int] = (1, 1)


@dataclass(frozen=True)
class FeasibilityParams:
    tol: float = 1e-9
    k_sigma: float = 3.0


@dataclass(frozen=True, eq=False)
class RunConfig:
    model: ModelSpec
    n_trials: int
    seed: int
    mode: InterpretationMode = InterpretationMode.KOLMOGOROV_AXIOMATIC
    flags: ExperimentFlags = ExperimentFlags()
    analyses: tuple[str, ...] = ()
    trials_path: Optional[str] = None
    report_path: Optional[str] = None
    blame_sigma: float = 3.0
    frequentism: FrequentismParams = FrequentismParams()
    feasibility: FeasibilityParams = FeasibilityParams()
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "n_trials": self.n_trials,
            "seed": self.seed,
            "interpretation": {"mode": self.mode.value, **self.flags.__dict__},
            "analyses": list(self.analyses),
            "blame_sigma": self.blame_sigma,
            "frequentism": self.frequentism.__dict__ | {"attribute": list(self.frequentism.attribute)},
            "feasibility": self.feasibility.__dict__,
        }


def default_analyses(model: ModelSpec) -> tuple[str, ...]:
    if model.kind.has_counterfactuals:
        return ANALYSES
    return ("space1", "frequentism", "feasibility")


def parse_mode(value: str) -> InterpretationMode:
    try:
        return InterpretationMode(value)
    except ValueError:
        names = ", ".join(m.value for m in InterpretationMode)
        raise ConfigError(f"unknown interpretation mode {value!r} (expected one of {names})")


def _response(m: dict) -> tuple[ResponseTable, Optional[list]]:
    if m.get("response") == "random":
        gen = np.random.default_rng(int(m.get("response_seed", 0)))
        k = int(m.get("lambda_cardinality", DEFAULT_LAMBDA_CARDINALITY))
        table = ResponseTable.random(gen, k, deterministic=bool(m.get("deterministic", False)))
    elif "response_left" in m and "response_right" in m:
        table = ResponseTable(m["response_left"], m["response_right"])
    elif "response_constant" in m:
        table = ResponseTable.constant(float(m["response_constant"]),
                                       int(m.get("lambda_cardinality", 1)))
    else:
        raise ConfigError("model needs response_left/response_right, response_constant, "
                          "or response = \"random\"")
    return table, m.get("lambda_weights")


def model_from_dict(m: dict) -> ModelSpec:
    kind = m.get("kind", "quantum")
    angles = m.get("angles", [0.0, 45.0, 22.5, -22.5])
    if len(angles) != 4:
        raise ConfigError("angles must list a, a', b, b'")
    settings = SettingSet.from_degrees(*map(float, angles))
    if kind == "quantum":
        return ModelSpec.quantum(float(m.get("visibility", 1.0)), settings)
    table, weights = _response(m)
    if kind in ("lhv", "lhv_deterministic", "lhv_stochastic"):
        spec = ModelSpec.lhv(table, weights, settings)
        if kind != "lhv" and spec.kind is not ModelKind(kind):
            spec = ModelSpec(ModelKind(kind), settings, response=table, lambda_weights=weights)
        return spec
    if kind == "signaling":
        return ModelSpec.signaling(float(m.get("signaling_strength", 1.0)), table, weights, settings)
    if kind == "conspiracy":
        return ModelSpec.conspiracy(float(m.get("conspiracy_bias", 1.0)), table, weights, settings)
    raise ConfigError(f"unknown model kind {kind!r}")


def config_from_dict(d: dict) -> RunConfig:
    try:
        model = model_from_dict(d.get("model", {}))
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as e:
        raise ConfigError(f"invalid model: {e}") from e
    n = int(d.get("n_trials", 10000))
    if n < 1:
        raise ConfigError("n_trials must be at least 1")
    interp = d.get("interpretation", {})
    mode = parse_mode(interp.get("mode", "kolmogorov"))
    flags = ExperimentFlags(bool(interp.get("spacelike_separated", False)),
                            bool(interp.get("conditions_exhaustive", False)))
    analyses = tuple(d.get("analyses", default_analyses(model)))
    unknown = [a for a in analyses if a not in ANALYSES]
    if unknown:
        raise ConfigError(f"unknown analyses {unknown}")
    if "space2" in analyses and not model.kind.has_counterfactuals:
        raise ConfigError(
            f"space2 requested for a {model.kind.value} model: this source assigns no values "
            "to unmeasured settings, so there is no counterfactual record; request "
            "'feasibility' for the joint-distribution test on the observed contexts")
    out = d.get("output", {})
    fq = d.get("frequentism", {})
    fs = d.get("feasibility", {})
    try:
        return RunConfig(
            model=model, n_trials=n, seed=int(d.get("seed", 0)), mode=mode, flags=flags,
            analyses=analyses, trials_path=out.get("trials"), report_path=out.get("report"),
            blame_sigma=float(d.get("blame_sigma", 3.0)),
            frequentism=FrequentismParams(float(fq.get("eps", 0.01)),
                                          float(fq.get("tail_fraction", 0.2)),
                                          float(fq.get("selection_eps", 0.02)),
                                          tuple(fq.get("attribute", (1, 1)))),
            feasibility=FeasibilityParams(float(fs.get("tol", 1e-9)),
                                          float(fs.get("k_sigma", 3.0))),
            raw=d)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from e


def load_config(path: str | Path) -> RunConfig:
    with open(path, "rb") as fh:
        try:
            d = tomli.load(fh)
        except tomli.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
    return config_from_dict(d)
