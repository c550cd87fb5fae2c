"""Scenario configuration files (JSON) validated with pydantic."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..gas_core import GasState, PressureLaw
from ..junction import CouplingLaw
from ..profiles import PipeProfile, SmoothProfile, hat_stationary, pc_approximate
from ..riemann import WaveFamily
from ..wft_engine import InitialDatum, Scenario, WftParams, stationary_with_waves

PRESETS = Path(__file__).with_name("presets")


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LawConfig(_Model):
    kind: Literal["isothermal", "gamma_law"] = "isothermal"
    c: float = Field(1.0, gt=0)
    k: float = Field(1.0, gt=0)
    gamma: float = Field(1.4, ge=1.0)

    def build(self) -> PressureLaw:
        if self.kind == "isothermal":
            return PressureLaw.isothermal(self.c)
        return PressureLaw.gamma_law(self.k, self.gamma)


class CouplingConfig(_Model):
    kind: Literal["smooth_section", "zero_defect"] = "smooth_section"
    max_relative_jump: float = Field(0.25, gt=0)
    mach_max: float = Field(0.99, gt=0, lt=1)

    def build(self) -> CouplingLaw:
        kw = {"max_relative_jump": self.max_relative_jump, "mach_max": self.mach_max}
        if self.kind == "smooth_section":
            return CouplingLaw.smooth_section(**kw)
        return CouplingLaw.zero_defect(**kw)


class PcProfileConfig(_Model):
    kind: Literal["pc"] = "pc"
    positions: list[float] = []
    sections: list[float] = [1.0]

    def build(self) -> PipeProfile:
        return PipeProfile(tuple(self.positions), tuple(self.sections))


class RampProfileConfig(_Model):
    kind: Literal["ramp"] = "ramp"
    X: float = Field(gt=0)
    a_left: float = Field(gt=0)
    a_right: float = Field(gt=0)
    n: int = Field(gt=0)

    def smooth(self) -> SmoothProfile:
        return SmoothProfile.ramp(self.X, self.a_left, self.a_right)

    def build(self) -> PipeProfile:
        return pc_approximate(self.smooth(), self.n).profile


class SmoothProfileConfig(_Model):
    kind: Literal["smooth"] = "smooth"
    knots: list[float]
    values: list[float]
    n: int = Field(gt=0)

    def smooth(self) -> SmoothProfile:
        return SmoothProfile(tuple(self.knots), tuple(self.values))

    def build(self) -> PipeProfile:
        return pc_approximate(self.smooth(), self.n).profile


ProfileConfig = Union[PcProfileConfig, RampProfileConfig, SmoothProfileConfig]


class WaveSpec(_Model):
    family: Literal[1, 2]
    sigma: float
    x: float


class DatumConfig(_Model):
    """``constant``: ``u_left`` everywhere; ``stationary``: stationary datum from
    ``u_left``; ``waves``: the stationary datum with ``waves`` superimposed."""

    kind: Literal["constant", "stationary", "waves"] = "stationary"
    u_left: tuple[float, float] = (1.0, 0.0)
    waves: list[WaveSpec] = []

    @field_validator("u_left")
    @classmethod
    def _positive_density(cls, v):
        if not v[0] > 0:
            raise ValueError("density must be positive")
        return v

    @model_validator(mode="after")
    def _waves_only_with_waves(self):
        if self.waves and self.kind != "waves":
            raise ValueError("waves are only allowed with kind='waves'")
        return self

    def build(self, law, claw, profile) -> InitialDatum:
        u = GasState(*self.u_left)
        if self.kind == "constant":
            return InitialDatum.constant(u)
        if self.kind == "stationary":
            return InitialDatum.from_stationary(hat_stationary(law, claw, profile, u))
        waves = [(WaveFamily(w.family), w.sigma, w.x) for w in self.waves]
        return stationary_with_waves(law, claw, profile, u, waves)


class ParamsConfig(_Model):
    eps: float = Field(0.01, gt=0)
    eps_check: Optional[float] = Field(None, gt=0)
    lam_hat: Optional[float] = Field(None, gt=0)
    t_end: float = Field(1.0, ge=0)
    max_events: int = Field(1_000_000, gt=0)
    snapshot_dt: Optional[float] = Field(None, gt=0)
    glimm_C: Optional[float] = Field(None, ge=0)
    monitor: Literal["auto", "raise", "record", "off"] = "auto"
    upsilon_tol: float = Field(1e-9, ge=0)

    def build(self) -> WftParams:
        return WftParams(**self.model_dump())


class OutputConfig(_Model):
    out_dir: str = "out"
    snapshots: bool = True
    events: bool = True


class ScenarioConfig(_Model):
    name: str = "scenario"
    law: LawConfig = LawConfig()
    coupling: CouplingConfig = CouplingConfig()
    profile: ProfileConfig = Field(default_factory=PcProfileConfig, discriminator="kind")
    datum: DatumConfig = DatumConfig()
    params: ParamsConfig = ParamsConfig()
    output: OutputConfig = OutputConfig()
    seed: int = 0
    notes: str = ""

    def build(self) -> tuple[Scenario, WftParams]:
        law = self.law.build()
        claw = self.coupling.build()
        prof = self.profile.build()
        datum = self.datum.build(law, claw, prof)
        return Scenario(law, claw, prof, datum), self.params.build()

    def with_overrides(self, **fields) -> "ScenarioConfig":
        """Copy with dotted-path overrides, e.g. ``{"params.eps": 1e-3}``."""
        data = self.model_dump()
        for key, val in fields.items():
            node = data
            *head, last = key.split(".")
            for h in head:
                node = node[h]
            node[last] = val
        return ScenarioConfig.model_validate(data)


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a scenario file, or a preset by bare name (``figure1``, ``blowup``, ...)."""
    p = Path(path)
    if not p.exists() and not p.suffix:
        p = PRESETS / f"{p.name}.json"
    return ScenarioConfig.model_validate(json.loads(p.read_text()))


def preset_names() -> list[str]:
    return sorted(p.stem for p in PRESETS.glob("*.json"))
