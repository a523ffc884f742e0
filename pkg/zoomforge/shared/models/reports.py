import math
from typing import Optional

import pydantic
from pydantic import Field


class CapacityResult(pydantic.BaseModel):
    capacity: float
    input_distribution: list[float]
    iterations: int
    gap: float
    tolerance: float
    converged: bool
    # lower bounds I(p_n) per iteration; nondecreasing.
    lower_bounds: list[float] = Field(default_factory=list, exclude=True)


class Estimate(pydantic.BaseModel):
    value: float
    stderr: float = 0.0
    label: str = "exact"

    def lower(self, z: float = 2.0) -> float:
        return self.value - z * self.stderr

    def upper(self, z: float = 2.0) -> float:
        return self.value + z * self.stderr


class Verdicts(pydantic.BaseModel):
    # C >= L_inf, needed for an asymptotically mean stationary loop.
    ams_necessary: bool
    # C >= V_hat, against the empirical occupation measure.
    phr_necessary: bool
    # C > N log2|a| + 1; None without a contraction certificate.
    sufficiency: Optional[bool] = None
    # 2^{R'} > |a| / alpha, the working condition of the zoom construction.
    rate_condition: Optional[bool] = None


class BoundReport(pydantic.BaseModel):
    v_hat: Estimate
    l_inf: float
    m_sup: float
    linear_bound: Optional[float] = None
    sufficiency_threshold: Optional[float] = None
    channel_capacity: float
    codec_rate: Optional[float] = None
    zoom_ratio: Optional[float] = None
    verdicts: Verdicts

    def consistent(self, z: float = 2.0) -> bool:
        """L_inf <= V_hat <= M_sup within z standard errors."""
        slack = z * self.v_hat.stderr + 1e-9
        return self.l_inf - slack <= self.v_hat.value <= self.m_sup + slack

    def rows(self) -> list[tuple[str, str]]:
        def fmt(x):
            if x is None:
                return "n/a"
            if isinstance(x, bool):
                return "satisfied" if x else "VIOLATED"
            if math.isinf(x):
                return "inf" if x > 0 else "-inf"
            return f"{x:.6f}"

        v = self.verdicts
        return [
            ("C (bits/step)", fmt(self.channel_capacity)),
            (f"V_hat ({self.v_hat.label})", f"{fmt(self.v_hat.value)} ± {self.v_hat.stderr:.6f}"),
            ("L_inf", fmt(self.l_inf)),
            ("M_sup", fmt(self.m_sup)),
            ("sum log2|lambda|, |lambda|>1", fmt(self.linear_bound)),
            ("N log2|a| + 1", fmt(self.sufficiency_threshold)),
            ("codec rate log2(K^N+1)", fmt(self.codec_rate)),
            ("|a| / alpha", fmt(self.zoom_ratio)),
            ("C ≥ L_inf", fmt(v.ams_necessary)),
            ("C ≥ V_hat", fmt(v.phr_necessary)),
            ("C > N log2|a| + 1", fmt(v.sufficiency)),
            ("2^R' > |a| / alpha", fmt(v.rate_condition)),
        ]


class RunManifest(pydantic.BaseModel):
    config_hash: str
    name: str
    seeds: list[int]
    artifacts: list[str] = Field(default_factory=list)
    # sha256 of every artifact, keyed like `artifacts`.
    digests: dict[str, str] = Field(default_factory=dict)
    version: str
    # estimator warnings collected during the run.
    warnings: list[str] = Field(default_factory=list)
