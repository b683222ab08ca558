"""Scenario configuration: a versioned JSON document holding the plant,
pattern pair, gain schedules, dwell and delay data, certificate parameters,
and simulation settings.

Matrices are row-major nested arrays. Validation errors name the offending
field path so CLI users get actionable diagnostics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .certificates import DwellSpec
from .decomposition import (
    DecomposableMatrixSpec,
    DecomposablePlant,
    GainSchedule,
    PatternPair,
)
from .simulate import DelayProfile

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the offending dotted path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _require(d: dict, key: str, path: str):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"{path}.{key}" if path else key, "missing field")
    return d[key]


def _matrix(d: dict, key: str, path: str) -> list:
    m = _require(d, key, path)
    full = f"{path}.{key}" if path else key
    if not (isinstance(m, list) and m and all(isinstance(r, list) for r in m)):
        raise ConfigError(full, "expected a nested array (matrix)")
    width = len(m[0])
    for r in m:
        if len(r) != width:
            raise ConfigError(full, "ragged matrix rows")
        for v in r:
            if not isinstance(v, (int, float)):
                raise ConfigError(full, "matrix entries must be numbers")
    return m


def _number(d: dict, key: str, path: str) -> float:
    v = _require(d, key, path)
    if not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}" if path else key, "expected a number")
    return float(v)


@dataclass(frozen=True)
class LoopCertParams:
    """Certificate scalars plus the window pairing for one loop."""

    d1: float
    d2: float
    mu: float
    gamma: float
    eta: int
    horizon: float

    def to_dict(self) -> dict:
        return {"d1": self.d1, "d2": self.d2, "mu": self.mu,
                "gamma": self.gamma, "eta": self.eta, "horizon": self.horizon}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    plant: DecomposablePlant
    gains: GainSchedule
    dwell: DwellSpec
    delay: DelayProfile
    grid_size: int
    controller_cert: LoopCertParams
    observer_cert: LoopCertParams
    step: float
    horizon: float
    seeds: tuple[int, ...]

    def to_dict(self) -> dict:
        delay_block = {"kind": self.delay.kind}
        if self.delay.kind == "constant":
            delay_block["value"] = self.delay.params["value"]
        elif self.delay.kind == "sinusoid":
            delay_block.update({k: self.delay.params[k]
                                for k in ("amplitude", "frequency", "offset")})
        else:
            delay_block["times"] = list(map(float, self.delay.params["times"]))
            delay_block["values"] = list(map(float, self.delay.params["values"]))
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "plant": {
                "a": {"decentralized": self.plant.a_spec.decentralized.tolist(),
                      "interconnected": self.plant.a_spec.interconnected.tolist()},
                "b": {"decentralized": self.plant.b_spec.decentralized.tolist(),
                      "interconnected": self.plant.b_spec.interconnected.tolist()},
                "c": {"decentralized": self.plant.c_spec.decentralized.tolist(),
                      "interconnected": self.plant.c_spec.interconnected.tolist()},
            },
            "pattern": {"p1": self.plant.pattern.p1.tolist(),
                        "p2": self.plant.pattern.p2.tolist(),
                        "sigma_range": list(self.plant.pattern.sigma_range)},
            "gains": {"k_a": self.gains.k_a.tolist(),
                      "k_b": self.gains.k_b.tolist(),
                      "l_a": self.gains.l_a.tolist(),
                      "l_b": self.gains.l_b.tolist()},
            "dwell": {"delta_min": self.dwell.delta_min,
                      "delta_max": self.dwell.delta_max},
            "delay": delay_block,
            "certificates": {"grid_size": self.grid_size,
                             "controller": self.controller_cert.to_dict(),
                             "observer": self.observer_cert.to_dict()},
            "simulation": {"step": self.step, "horizon": self.horizon,
                           "seeds": list(self.seeds)},
        }


def _loop_cert(block: dict, path: str) -> LoopCertParams:
    eta = _require(block, "eta", path)
    if not isinstance(eta, int) or eta < 0:
        raise ConfigError(f"{path}.eta", "expected a nonnegative integer")
    return LoopCertParams(d1=_number(block, "d1", path),
                          d2=_number(block, "d2", path),
                          mu=_number(block, "mu", path),
                          gamma=_number(block, "gamma", path),
                          eta=eta,
                          horizon=_number(block, "horizon", path))


def config_from_dict(doc: dict) -> ScenarioConfig:
    version = _require(doc, "schema_version", "")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r}")
    name = doc.get("name", "scenario")

    plant_block = _require(doc, "plant", "")
    specs = {}
    for key in ("a", "b", "c"):
        sub = _require(plant_block, key, "plant")
        path = f"plant.{key}"
        try:
            specs[key] = DecomposableMatrixSpec(
                decentralized=np.array(_matrix(sub, "decentralized", path)),
                interconnected=np.array(_matrix(sub, "interconnected", path)))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from exc

    pat = _require(doc, "pattern", "")
    sigma_range = pat.get("sigma_range", [0.0, 1.0])
    try:
        pattern = PatternPair(p1=np.array(_matrix(pat, "p1", "pattern")),
                              p2=np.array(_matrix(pat, "p2", "pattern")),
                              sigma_range=tuple(sigma_range))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("pattern", str(exc)) from exc

    try:
        plant = DecomposablePlant(a_spec=specs["a"], b_spec=specs["b"],
                                  c_spec=specs["c"], pattern=pattern)
    except ValueError as exc:
        raise ConfigError("plant", str(exc)) from exc

    gb = _require(doc, "gains", "")
    try:
        gains = GainSchedule(k_a=np.array(_matrix(gb, "k_a", "gains")),
                             k_b=np.array(_matrix(gb, "k_b", "gains")),
                             l_a=np.array(_matrix(gb, "l_a", "gains")),
                             l_b=np.array(_matrix(gb, "l_b", "gains")))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("gains", str(exc)) from exc

    db = _require(doc, "dwell", "")
    try:
        dwell = DwellSpec(delta_min=_number(db, "delta_min", "dwell"),
                          delta_max=_number(db, "delta_max", "dwell"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("dwell", str(exc)) from exc

    dl = _require(doc, "delay", "")
    kind = _require(dl, "kind", "delay")
    try:
        if kind == "constant":
            delay = DelayProfile.constant(_number(dl, "value", "delay"))
        elif kind == "sinusoid":
            delay = DelayProfile.sinusoid(
                amplitude=_number(dl, "amplitude", "delay"),
                frequency=_number(dl, "frequency", "delay"),
                offset=_number(dl, "offset", "delay"))
        elif kind == "sampled":
            delay = DelayProfile.sampled(_require(dl, "times", "delay"),
                                         _require(dl, "values", "delay"))
        else:
            raise ConfigError("delay.kind", f"unknown kind {kind!r}")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("delay", str(exc)) from exc

    cb = _require(doc, "certificates", "")
    grid_size = _require(cb, "grid_size", "certificates")
    if not isinstance(grid_size, int) or grid_size < 2:
        raise ConfigError("certificates.grid_size", "expected an integer >= 2")
    controller = _loop_cert(_require(cb, "controller", "certificates"),
                            "certificates.controller")
    observer = _loop_cert(_require(cb, "observer", "certificates"),
                          "certificates.observer")

    sim = _require(doc, "simulation", "")
    step = _number(sim, "step", "simulation")
    horizon = _number(sim, "horizon", "simulation")
    seeds = _require(sim, "seeds", "simulation")
    if not (isinstance(seeds, list) and seeds
            and all(isinstance(s, int) for s in seeds)):
        raise ConfigError("simulation.seeds", "expected a non-empty integer list")
    if horizon <= 0:
        raise ConfigError("simulation.horizon", "must be positive")
    if step <= 0:
        raise ConfigError("simulation.step", "must be positive")

    return ScenarioConfig(name=name, plant=plant, gains=gains, dwell=dwell,
                          delay=delay, grid_size=grid_size,
                          controller_cert=controller, observer_cert=observer,
                          step=step, horizon=horizon, seeds=tuple(seeds))


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON in {path}: {exc}") from exc
    return config_from_dict(doc)


def save_config(cfg: ScenarioConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _circulant(first_row: list[float]) -> list[list[float]]:
    n = len(first_row)
    return [[first_row[(j - i) % n] for j in range(n)] for i in range(n)]


def consensus_example() -> dict:
    """The six-agent consensus scenario: rotational agent dynamics with a
    switching ring/denser-graph interconnection, scheduled output feedback,
    dwell [0.1, 0.5], and delay 0.05 sin(4 t) + 0.3."""
    zeros = [[0.0, 0.0], [0.0, 0.0]]
    return {
        "schema_version": SCHEMA_VERSION,
        "name": "consensus6",
        "plant": {
            "a": {"decentralized": [[0.0, 1.0], [-1.0, 0.0]],
                  "interconnected": [[0.0, -0.5], [0.5, 0.0]]},
            "b": {"decentralized": [[1.0, 0.0], [0.0, 0.6]],
                  "interconnected": zeros},
            "c": {"decentralized": [[1.0, 0.0], [0.0, 1.0]],
                  "interconnected": zeros},
        },
        "pattern": {
            "p1": _circulant([1.0, -0.5, 0.0, 0.0, 0.0, -0.5]),
            "p2": _circulant([1.0, -0.25, -0.25, 0.0, -0.25, -0.25]),
            "sigma_range": [0.0, 1.0],
        },
        "gains": {
            "k_a": [[-0.5, 0.0], [0.0, -0.5]],
            "k_b": [[0.1, 0.0], [0.0, 0.1]],
            "l_a": [[-0.5, 0.0], [0.0, -0.5]],
            "l_b": [[0.1, 0.0], [0.0, 0.1]],
        },
        "dwell": {"delta_min": 0.1, "delta_max": 0.5},
        "delay": {"kind": "sinusoid", "amplitude": 0.05, "frequency": 4.0,
                  "offset": 0.3},
        "certificates": {
            "grid_size": 33,
            "controller": {"d1": 0.01, "d2": 0.01, "mu": 1.0, "gamma": 1.0,
                           "eta": 50, "horizon": 5.0},
            "observer": {"d1": 0.01, "d2": 0.01, "mu": 1.0, "gamma": 1.0,
                         "eta": 75, "horizon": 7.5},
        },
        "simulation": {"step": 0.01, "horizon": 40.0,
                       "seeds": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]},
    }
