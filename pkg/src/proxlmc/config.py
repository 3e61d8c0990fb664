"""Experiment configuration: JSON parsing, schema validation, content hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

import jsonschema

from .potentials import CompositePotential, IsotropicQuadratic, L1Potential, Potential
from .reference_flows import GaussianMeasure
from .samplers import Algorithm, GaussianInit, SchemeConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "build_potential"]


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def _schema() -> dict:
    text = resources.files("proxlmc.schemas").joinpath(
        "experiment_config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def build_potential(spec: dict) -> Potential:
    """Construct a potential from its config descriptor."""
    kind = spec["kind"]
    dim = spec["dim"]
    if kind == "quadratic":
        if "lambda" not in spec:
            raise ConfigError("quadratic potential needs 'lambda'")
        return IsotropicQuadratic(spec["lambda"], dim)
    if kind == "l1":
        if "l1_weight" not in spec:
            raise ConfigError("l1 potential needs 'l1_weight'")
        return L1Potential(spec["l1_weight"], dim)
    if kind == "composite":
        if "lambda" not in spec or "l1_weight" not in spec:
            raise ConfigError("composite potential needs 'lambda' and 'l1_weight'")
        return CompositePotential(IsotropicQuadratic(spec["lambda"], dim),
                                  L1Potential(spec["l1_weight"], dim))
    raise ConfigError(f"unknown potential kind {kind!r}")


def _gaussian_from_spec(spec: dict) -> GaussianMeasure:
    mean = spec["mean"]
    if "cov_diag" in spec:
        cov = spec["cov_diag"]
        if len(cov) != len(mean):
            raise ConfigError("cov_diag length must match mean length")
        return GaussianMeasure(mean, cov)
    return GaussianMeasure.isotropic(mean, spec["variance"])


@dataclass(frozen=True)
class ExperimentConfig:
    potential: Potential
    scheme: SchemeConfig
    init_measure: GaussianMeasure
    target: GaussianMeasure | None
    noise_scale: float | None
    kl0_override: float | None
    w2_init_override: float | None
    out_dir: str
    formats: tuple[str, ...]
    content_hash: str
    raw: dict

    @property
    def init(self) -> GaussianInit:
        import numpy as np

        return GaussianInit(self.init_measure.mean, np.sqrt(self.init_measure.cov))


def load_config(source: str | dict) -> ExperimentConfig:
    """Parse and validate a config given as a JSON file path or a dict."""
    if isinstance(source, dict):
        raw = source
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}") from exc

    potential = build_potential(raw["potential"])
    sampler = raw["sampler"]
    scheme = SchemeConfig(
        h=sampler["h"],
        n_steps=sampler["n_steps"],
        n_particles=sampler["n_particles"],
        algorithm=Algorithm(sampler.get("algorithm", "prox_ula")),
        seed=sampler["seed"],
        record_half_steps=sampler.get("record_half_steps", False),
    )
    init_measure = _gaussian_from_spec(raw["init"])
    if init_measure.dim != potential.dim:
        raise ConfigError("init dimension must match the potential dimension")
    target = _gaussian_from_spec(raw["target"]) if "target" in raw else None
    if target is not None and target.dim != potential.dim:
        raise ConfigError("target dimension must match the potential dimension")
    bounds = raw.get("bounds", {})
    output = raw.get("output", {})
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return ExperimentConfig(
        potential=potential,
        scheme=scheme,
        init_measure=init_measure,
        target=target,
        noise_scale=sampler.get("noise_scale"),
        kl0_override=bounds.get("kl0"),
        w2_init_override=bounds.get("w2_init"),
        out_dir=output.get("directory", "."),
        formats=tuple(output.get("formats", ["csv"])),
        content_hash=hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
        raw=raw,
    )
