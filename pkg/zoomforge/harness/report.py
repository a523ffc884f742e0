import typing
from pathlib import Path

import pydantic
from loguru import logger
from pydantic import Field

from zoomforge.bounds import report_lines
from zoomforge.shared.errors import ReportError, VerdictInconsistency
from zoomforge.shared.models.reports import BoundReport
from .persistence import read_csv, read_json, read_manifest, verify_artifacts

# a bounded box whose Cesàro average ends below this is losing its mass
MASS_FLOOR = 0.5


class RunReport(pydantic.BaseModel):
    name: str
    config_hash: str
    version: str
    artifacts: int
    bounds: typing.Optional[BoundReport] = None
    lines: list[str] = Field(default_factory=list)
    # diagnostics claiming the loop is stable
    stability_claims: list[str] = Field(default_factory=list)
    # necessary conditions the run violates
    violations: list[str] = Field(default_factory=list)
    flags: list[str] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not (self.stability_claims and self.violations)

    @property
    def exit_code(self) -> int:
        return 0 if self.consistent else VerdictInconsistency.exit_code


def _load(root: Path, names: list[str]) -> dict[str, typing.Any]:
    """Parse every JSON and CSV artifact; malformed ones raise ReportError."""
    data = dict()
    for name in names:
        path = root / name
        if name.endswith(".json"):
            data[name] = read_json(path)
        elif name.endswith(".csv"):
            data[name] = read_csv(path)
    return data


def collate(root: str | Path) -> RunReport:
    """
    Check a run directory against its manifest and gather the bound report
    and the estimator summaries into one RunReport.
    """
    root = Path(root)
    manifest = read_manifest(root)
    missing, corrupted = verify_artifacts(root, manifest)
    if missing:
        raise ReportError(f"Missing artifacts in {root}: {', '.join(missing)}", missing)
    if corrupted:
        raise ReportError(f"Artifacts in {root} do not match the manifest: {', '.join(corrupted)}", corrupted)
    data = _load(root, manifest.artifacts)

    report = RunReport(
        name=manifest.name,
        config_hash=manifest.config_hash,
        version=manifest.version,
        artifacts=len(manifest.artifacts),
        warnings=list(manifest.warnings),
    )

    if (bounds := data.get("bounds.json")) is not None:
        try:
            report.bounds = BoundReport.model_validate(bounds)
        except pydantic.ValidationError as err:
            raise ReportError(f"bounds.json is malformed: {err}", ["bounds.json"]) from err
        report.lines = report_lines(report.bounds)
        v = report.bounds.verdicts
        if not v.ams_necessary:
            report.violations.append("C < L_inf")
        if not v.phr_necessary:
            report.violations.append("C < V_hat")
        if not report.bounds.consistent():
            report.flags.append("L_inf <= V_hat <= M_sup fails within 2 standard errors")

    if (stability := data.get("stability.json")) and stability.get("bounded"):
        report.stability_claims.append(f"tail states bounded (max |x| = {stability['tail_max']:.4g})")

    if (drift := data.get("drift.json")) and (low := drift.get("b0_ci_low")) is not None and low > 0:
        report.stability_claims.append(f"Δ drift above F negative (b_0 CI low = {low:.4g})")

    if ams := data.get("ams.json"):
        boxes = ams.get("boxes", [])
        if boxes and all(b["final_average"] < MASS_FLOOR and b["final_mass"] < b["final_average"] for b in boxes):
            report.flags.append("non-AMS signature: bounded-box Cesàro mass is decaying")

    if (stopping := data.get("stopping.json")) and not stopping.get("verified", True):
        report.flags.append("stopping times failed their replay check")

    if (tail := data.get("tail.json")) and not tail.get("monotone_across_bins", True):
        report.flags.append("P(gap >= 2) is not decreasing across Δ bins")

    if (transience := data.get("transience.json")) and transience.get("bounded_away"):
        report.flags.append("finite-memory coder: return probability bounded away from 1")

    if not report.consistent:
        logger.warning(
            f"{manifest.name}: {', '.join(report.violations)} while {', '.join(report.stability_claims)}."
        )
    return report


def report_text(report: RunReport) -> str:
    """Plain `name: value` lines; the first block is the bound report."""
    lines = [f"run: {report.name}", f"config hash: {report.config_hash}"]
    lines.extend(report.lines)
    lines.extend(f"stability: {c}" for c in report.stability_claims)
    lines.extend(f"violation: {v}" for v in report.violations)
    lines.extend(f"flag: {f}" for f in report.flags)
    lines.append(f"verdicts: {'consistent' if report.consistent else 'INCONSISTENT'}")
    return "\n".join(lines) + "\n"
