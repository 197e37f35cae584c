"""Experiment configuration: YAML file validated into pydantic models."""
from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .geometry import LorentzMap, Wedge, standard_warping
from .wavepacket import KGSolution, MomentumProfile


class ConfigError(ValueError):
    pass


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _vectors(values, s: int, what: str) -> list[list[float]]:
    out = []
    for v in values:
        v = [float(v)] if isinstance(v, (int, float)) else [float(c) for c in v]
        if len(v) != s:
            raise ValueError(f"{what} must have {s} spatial components, got {len(v)}")
        out.append(v)
    return out


class ModelBlock(_Block):
    dimension: int = Field(2, ge=2, le=4)
    mass: float = Field(1.0, gt=0)
    kappa: float = Field(1.0, ge=0)
    eta: Optional[float] = None

    @field_validator("eta")
    @classmethod
    def _eta_only_in_4d(cls, v, info):
        if v is not None and info.data.get("dimension") != 4:
            raise ValueError("eta may only be set when dimension is 4")
        return v


class ModesBlock(_Block):
    momenta: list = Field(default_factory=lambda: [-1.0, -0.3, 0.4, 1.2])
    n_max: int = Field(4, ge=1, le=6)


class WedgeBlock(_Block):
    rapidity: float = 0.0
    rotation: float = 0.0
    complement: bool = False


class PacketBlock(_Block):
    center: list
    radius: float = Field(gt=0)
    smoothness: float = Field(1.0, gt=0)


class TolerancesBlock(_Block):
    antisymmetry: float = 1e-14
    covariance: float = 1e-12
    mass_shell: float = 1e-12
    warp: float = 1e-12
    defw: float = 1e-11
    unitarity: float = 1e-12
    factorization: float = 1e-13
    smatrix_identity: float = 1e-13
    swap: float = 1e-13
    quadrature: float = 1e-6
    slope: float = 0.15
    dreg: float = 1e-6
    regulator: float = 1e-3
    decay_outside: float = -4.0
    decay_inside: float = -1.0


class DecayBlock(_Block):
    center: list = Field(default_factory=lambda: [0.0])
    radius: float = Field(1.0, gt=0)
    smoothness: float = Field(1.0, gt=0)
    outside_velocity: list = Field(default_factory=lambda: [3.0])
    inside_velocity: list = Field(default_factory=lambda: [0.0])
    t_min: float = Field(10.0, gt=0)
    t_max: float = Field(100.0, gt=0)
    samples: int = Field(19, ge=2)
    points: int = Field(4096, ge=16)

    @model_validator(mode="after")
    def _times(self):
        if self.t_max <= self.t_min:
            raise ValueError("t_max must exceed t_min")
        return self


class OscintBlock(_Block):
    eps: float = Field(0.5, gt=0, le=1)
    radius: float = Field(12.0, gt=0)
    points: int = Field(1024, ge=64)
    momentum_bound: float = Field(2.0, ge=0)
    scan_p: float = 0.7
    scan_q: float = 0.4
    scan_eps: list[float] = Field(default_factory=lambda: [0.4, 0.2, 0.1])
    fd_step: float = Field(1e-3, gt=0)
    fd_half_width: float = Field(2.0, gt=0)
    phase_pairs: int = Field(100, ge=1)
    regulator_eps: float = Field(2.5e-4, gt=0, le=1)
    regulator_points: int = Field(4096, ge=64)


class WarpBlock(_Block):
    operators: int = Field(20, ge=1)
    n_max: int = Field(3, ge=1, le=5)
    translations: int = Field(5, ge=1)
    boost_rapidities: list[float] = Field(default_factory=lambda: [0.4, -0.9])


class ScatteringBlock(_Block):
    kappas: list[float] = Field(default_factory=lambda: [0.3, 1.0, 5.0])
    n_values: list[int] = Field(default_factory=lambda: [2, 3])
    tau: float = 10.0


class CompletenessBlock(_Block):
    mode_counts: list[int] = Field(default_factory=lambda: [3, 4, 5])
    span: float = Field(1.5, gt=0)
    n_values: list[int] = Field(default_factory=lambda: [2, 3])
    kappas: list[float] = Field(default_factory=lambda: [0.0, 1.0, 5.0])


class SmatrixBlock(_Block):
    max_particles: int = Field(4, ge=1)


class ExperimentConfig(_Block):
    model: ModelBlock = Field(default_factory=ModelBlock)
    modes: ModesBlock = Field(default_factory=ModesBlock)
    wedge: WedgeBlock = Field(default_factory=WedgeBlock)
    packets: list[PacketBlock] = Field(default_factory=list)
    tolerances: TolerancesBlock = Field(default_factory=TolerancesBlock)
    decay: DecayBlock = Field(default_factory=DecayBlock)
    oscint: OscintBlock = Field(default_factory=OscintBlock)
    warp: WarpBlock = Field(default_factory=WarpBlock)
    scattering: ScatteringBlock = Field(default_factory=ScatteringBlock)
    completeness: CompletenessBlock = Field(default_factory=CompletenessBlock)
    smatrix: SmatrixBlock = Field(default_factory=SmatrixBlock)

    @model_validator(mode="after")
    def _shapes(self):
        d = self.model.dimension
        s = d - 1
        try:
            moms = _vectors(self.modes.momenta, s, "modes.momenta entries")
        except (TypeError, ValueError) as exc:
            raise ValueError(f"modes.momenta: {exc}") from None
        if len({tuple(m) for m in moms}) != len(moms):
            raise ValueError("modes.momenta: modes must be pairwise distinct")
        for i, p in enumerate(self.packets):
            if len(p.center) != s:
                raise ValueError(f"packets.{i}.center must have {s} components")
        for name in ("center", "outside_velocity", "inside_velocity"):
            if len(getattr(self.decay, name)) != s:
                raise ValueError(f"decay.{name} must have {s} components")
        if self.wedge.rotation != 0.0 and d < 3:
            raise ValueError("wedge.rotation requires dimension >= 3")
        return self

    # --- domain objects -------------------------------------------------

    @property
    def dim(self) -> int:
        return self.model.dimension

    def mode_momenta(self) -> np.ndarray:
        return np.array(_vectors(self.modes.momenta, self.dim - 1, "momenta"))

    def warping(self):
        return standard_warping(self.dim, self.model.kappa, self.model.eta if self.dim == 4 else None)

    def wedge_object(self) -> Wedge:
        lam = LorentzMap.boost(self.dim, self.wedge.rapidity)
        if self.dim >= 3:
            lam = lam @ LorentzMap.rotation(self.dim, self.wedge.rotation)
        return Wedge(lam, sign=-1 if self.wedge.complement else 1)

    def packet_solutions(self) -> list[KGSolution]:
        return [
            KGSolution(MomentumProfile(p.center, p.radius, p.smoothness), self.model.mass) for p in self.packets
        ]


def _format_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"])
        msg = err["msg"].removeprefix("Value error, ")
        lines.append(f"{loc}: {msg}" if loc else msg)
    return "; ".join(lines)


def parse_config(data: dict | None) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data or {})
    except ValidationError as exc:
        raise ConfigError(_format_error(exc)) from None


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    """Load a YAML config; ``None`` selects the bundled default."""
    try:
        if path is None:
            text = resources.files("glscatter").joinpath("data/default.yaml").read_text()
        else:
            text = Path(path).read_text()
        data = yaml.safe_load(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError("config must be a mapping of blocks")
    return parse_config(data)
