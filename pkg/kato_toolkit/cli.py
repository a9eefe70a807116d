"""
Command-line front end for the Kato toolkit.
One declarative run config per invocation, deterministic report bodies.
"""

import csv
import io
import logging
import math
import os
from datetime import datetime
from enum import IntEnum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import typer
import yaml
from pydantic import BaseModel, Field, ValidationError
from rich.console import Console
from rich.table import Table

from . import __version__
from .api import (
    B0_RADII,
    ClassificationBuilder,
    FK_TIMES,
    TRUNCATION_LENGTHS,
    b0,
    compactness_study,
    embedding_spectrum,
    feynman_kac_at,
    ground_state_energy,
    potential_at,
    sup_potential,
)
from .config import Config, MonteCarloConfig, SearchConfig, ToleranceConfig
from .kernels import fit_envelope_constants, save_envelope_constants, self_test
from .potentials import LADDER_ORDERS, MeasureClass
from .profiles import Verdict
from .shorthand import parse_domain, parse_process
from .utils import (
    ConfigurationError,
    ToolkitError,
    dumps_record,
    format_float,
    loads_record,
    peak_memory_mb,
    render_csv,
    setup_logging,
    write_text,
)

logger = logging.getLogger(__name__)

# Initialize CLI app and console
app = typer.Typer(help="Kato toolkit - Kato, Dynkin and Green-tight classes, kernels and Feynman-Kac runs")
console = Console()

Command = Literal["classify", "potential", "embed", "fk", "b0", "kernels-selftest"]
Spec = Union[str, Dict[str, Any]]


class ExitCode(IntEnum):
    PASS = 0
    FAIL = 1
    USAGE = 2
    INCONCLUSIVE = 3


# =============================================================================
# Run configuration
# =============================================================================

class RunConfig(BaseModel):
    """One declarative run: what to compute, on what, and how precisely."""
    command: Command = Field(..., description="Operation to run")
    process: Optional[Spec] = Field(None, description="Process shorthand (brownian:d=3) or mapping")
    measure: Optional[Spec] = Field(None, description="Measure shorthand (lebesgue:ball(0,1)) or mapping")
    domain: Optional[Spec] = Field(None, description="Domain shorthand (strip:w=1,d=2) or mapping")
    dimension: Optional[int] = Field(None, ge=1, description="Ambient dimension; taken from the process when omitted")
    p: float = Field(1.0, ge=1, description="Exponent p of the p-potentials")
    point: Optional[List[float]] = Field(None, description="Evaluation point; sup-search when omitted")
    order: Optional[float] = Field(None, ge=0, description="Resolvent order; Green kernel (R_1 if recurrent) when omitted")
    radii: Optional[List[float]] = Field(None, description="Profile radii (b0: R values, classify: local radii)")
    orders: List[float] = Field(default_factory=lambda: list(LADDER_ORDERS), description="Resolvent ladder")
    chen: bool = Field(True, description="Run the Chen subset search during classify")
    k: int = Field(10, ge=1, description="Number of singular values for embed")
    h: float = Field(1 / 16, gt=0, description="Grid spacing of truncation studies")
    lengths: List[float] = Field(default_factory=lambda: list(TRUNCATION_LENGTHS), description="Truncation lengths")
    potential: Optional[str] = Field(None, description="Potential shorthand for fk (harmonic, constant,scale=1)")
    t: Optional[float] = Field(None, gt=0, description="Single fk time; decay ladder over `times` when omitted")
    times: List[float] = Field(default_factory=lambda: list(FK_TIMES), description="fk time ladder")
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    search: SearchConfig = Field(default_factory=SearchConfig)
    monte_carlo: MonteCarloConfig = Field(default_factory=MonteCarloConfig)
    seed: int = Field(20240101, description="Root seed")
    threads: int = Field(1, ge=1, description="Worker cap")
    out_dir: str = Field("reports", description="Report directory")
    report_format: Literal["csv", "record"] = Field("csv", description="Report body format")
    log_level: str = Field("INFO", description="Logging level")
    log_file: Optional[str] = Field(None, description="Optional log file")
    assert_in: bool = Field(False, description="CI mode: exit 1 when the headline verdict is OUT")

    def model_post_init(self, __context: Any) -> None:
        if self.dimension is None and self.process is not None:
            self.dimension = parse_process(self.process).dimension
        if self.command in ("classify", "potential", "fk") and self.process is None:
            raise ConfigurationError(f"{self.command} needs a process", "process")
        if self.command in ("classify", "potential") and self.measure is None:
            raise ConfigurationError(f"{self.command} needs a measure", "measure")
        if self.command in ("embed", "b0") and self.domain is None:
            raise ConfigurationError(f"{self.command} needs a domain", "domain")

    @classmethod
    def from_env(cls, command: str, **fields) -> "RunConfig":
        """Defaults from KATO_* environment variables, overridden by fields."""
        env = Config.from_env()
        base = dict(
            command=command,
            tolerances=env.tolerances,
            monte_carlo=env.monte_carlo,
            seed=env.seed,
            threads=env.threads,
            out_dir=env.out_dir,
            log_level=env.log_level,
            log_file=env.log_file,
        )
        base.update({k: v for k, v in fields.items() if v is not None})
        return _validated_run(base)

    @classmethod
    def from_yaml_text(cls, text: str) -> "RunConfig":
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigurationError("config document must be a mapping")
        return _validated_run(data)

    @classmethod
    def from_yaml(cls, path: Path) -> "RunConfig":
        return cls.from_yaml_text(Path(path).read_text(encoding="utf-8"))

    def to_yaml_text(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="python"), default_flow_style=False, sort_keys=True)

    def to_yaml(self, path: Path) -> Path:
        return write_text(Path(path), self.to_yaml_text())

    def toolkit_config(self) -> Config:
        return Config(tolerances=self.tolerances, search=self.search, monte_carlo=self.monte_carlo,
                      seed=self.seed, threads=self.threads, out_dir=self.out_dir,
                      log_level=self.log_level, log_file=self.log_file)


def _validated_run(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        raise ConfigurationError(err["msg"], ".".join(str(p) for p in err["loc"]) or "config") from None


# =============================================================================
# Report records
# =============================================================================

class ReportRecord(BaseModel):
    """Tabular body of a report plus a headline verdict and free-form details."""
    command: str = Field(..., description="Command that produced the record")
    title: str = Field("", description="Table title")
    verdict: Optional[Verdict] = Field(None, description="Headline verdict, None when the run has none")
    columns: List[str] = Field(default_factory=list, description="Column names in order")
    rows: List[List[Any]] = Field(default_factory=list, description="Cells: str, int, float (inf allowed) or None")
    details: Dict[str, Any] = Field(default_factory=dict, description="Full results in JSON-safe form")


def report_render(record: ReportRecord) -> Tuple[Table, str]:
    """Rich table and CSV text with the same column order; floats at 6 significant digits."""
    table = Table(title=record.title or record.command)
    for i, name in enumerate(record.columns):
        table.add_column(name, style="cyan" if i == 0 else None)
    for row in record.rows:
        table.add_row(*[_cell_text(c) for c in row])
    return table, render_csv(record.columns, [[_cell_text(c) for c in row] for row in record.rows])


def _cell_text(cell: Any) -> str:
    if cell is None:
        return ""
    if isinstance(cell, str):
        return cell
    return format_float(cell)


def _parse_cell(text: str) -> Any:
    if text == "":
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def parse_report_csv(text: str) -> Tuple[List[str], List[List[Any]]]:
    """Columns and typed rows of a rendered CSV body."""
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    table = list(csv.reader(io.StringIO(body)))
    if not table:
        return [], []
    return table[0], [[_parse_cell(c) for c in row] for row in table[1:]]


def parse_report(text: str) -> ReportRecord:
    """Inverse of the report file body: record documents parse fully, CSV bodies into columns and rows."""
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#")).strip()
    if body.startswith("{"):
        return ReportRecord.model_validate(_restore_inf(loads_record(body)))
    columns, rows = parse_report_csv(body)
    return ReportRecord(command="", columns=columns, rows=rows)


def _restore_inf(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _restore_inf(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_restore_inf(v) for v in value]
    if value in ("inf", "-inf", "nan"):
        return float(value)
    return value


def report_header(config: RunConfig) -> str:
    lines = [
        "kato-toolkit report",
        f"version: {__version__}",
        f"timestamp: {datetime.now().isoformat(timespec='seconds')}",
        f"seed: {config.seed}",
        f"workers: {config.threads}",
        f"peak_memory_mb: {peak_memory_mb():.1f}",
        "config:",
    ] + ["  " + line for line in config.to_yaml_text().splitlines()]
    return "".join(f"# {line}\n" for line in lines)


def report_body(record: ReportRecord, report_format: str) -> str:
    if report_format == "record":
        return dumps_record(record.model_dump(mode="python")) + "\n"
    return report_render(record)[1]


# =============================================================================
# Dispatch
# =============================================================================

def _classify(cfg: RunConfig, config: Config) -> ReportRecord:
    report = (ClassificationBuilder(config)
              .process(cfg.process)
              .measure(cfg.measure)
              .exponent(cfg.p)
              .with_chen(cfg.chen)
              .ladder(cfg.orders)
              .radii(local=cfg.radii)
              .run())
    return ReportRecord(
        command="classify",
        title=f"{report.measure_id} under {report.process.label}, p={report.p:g}",
        verdict=report.verdicts.get(MeasureClass.S_K.value),
        columns=["class", "verdict", "detail"],
        rows=[list(r) for r in report.rows()],
        details=report.to_record(),
    )


def _potential(cfg: RunConfig, config: Config) -> ReportRecord:
    label = "G" if cfg.order is None else f"R_{cfg.order:g}"
    if cfg.point is not None:
        res = potential_at(cfg.process, cfg.measure, cfg.point, cfg.p, cfg.order, config)
        verdict = Verdict.IN if math.isfinite(res.value) else Verdict.OUT
        return ReportRecord(
            command="potential", title=f"{label}^p mu at {cfg.point}", verdict=verdict,
            columns=["kernel", "p", "value", "error", "status"],
            rows=[[label, cfg.p, res.value, res.error, res.status.value]],
            details={"notes": res.notes},
        )
    res = sup_potential(cfg.process, cfg.measure, cfg.p, cfg.order, config=config)
    verdict = Verdict.OUT if not res.is_finite else (Verdict.IN if res.confident else Verdict.INCONCLUSIVE)
    argmax = "" if res.argmax is None else ";".join(format_float(v) for v in res.argmax)
    return ReportRecord(
        command="potential", title=f"sup_x {label}^p mu(x)", verdict=verdict,
        columns=["kernel", "p", "sup", "argmax", "evaluations", "confident"],
        rows=[[label, cfg.p, res.value, argmax, res.evaluations, str(res.confident).lower()]],
        details={"notes": res.notes},
    )


def _b0(cfg: RunConfig, config: Config) -> ReportRecord:
    profile = b0(cfg.domain, cfg.radii or B0_RADII, cfg.dimension, config)
    return ReportRecord(
        command="b0", title=profile.label, verdict=profile.verdict,
        columns=["R", "sup_mass", "verdict"],
        rows=[[R, v, profile.verdict.value] for R, v in zip(profile.abscissae, profile.values)],
        details=profile.model_dump(mode="python"),
    )


def _embed(cfg: RunConfig, config: Config) -> ReportRecord:
    domain = parse_domain(cfg.domain, cfg.dimension)
    if domain.bounded:
        report = embedding_spectrum(domain, cfg.k, cfg.process, config=config)
        return ReportRecord(
            command="embed", title=report.label, verdict=None,
            columns=["k", "sigma"],
            rows=[[i + 1, v] for i, v in enumerate(report.values)],
            details=report.model_dump(mode="python"),
        )
    study = compactness_study(domain, cfg.k, cfg.lengths, cfg.h, cfg.process, config=config)
    rows = []
    for i, (L, rep) in enumerate(zip(study.lengths, study.reports)):
        rows.append([L, rep.values[0], rep.values[-1], study.counts[i], study.changes[i - 1] if i else None])
    return ReportRecord(
        command="embed", title=f"truncation study on {domain.kind.value}", verdict=study.verdict,
        columns=["length", "sigma_1", "sigma_k", "count_above_half", "max_rel_change"],
        rows=rows,
        details={"singular_values": [rep.values for rep in study.reports]},
    )


def _fk(cfg: RunConfig, config: Config) -> ReportRecord:
    point = cfg.point or [0.0] * cfg.dimension
    if cfg.t is not None:
        est = feynman_kac_at(cfg.process, cfg.potential, cfg.t, point, cfg.domain, config)
        return ReportRecord(
            command="fk", title=est.label, verdict=None,
            columns=["t", "estimate", "se", "n", "dt", "bias_note"],
            rows=[[cfg.t, est.value, est.standard_error, est.n, est.dt, est.bias_note]],
            details={"notes": est.notes},
        )
    rate = ground_state_energy(cfg.process, cfg.potential, cfg.times, [point], cfg.domain, config)
    return ReportRecord(
        command="fk", title=f"decay rate {format_float(rate.rate)} +- {format_float(rate.standard_error)}",
        verdict=None,
        columns=["t", "estimate", "se", "n", "dt"],
        rows=[[t, e.value, e.standard_error, e.n, e.dt] for t, e in zip(rate.times, rate.estimates)],
        details={"rate": rate.rate, "standard_error": rate.standard_error, "notes": rate.notes},
    )


def _selftest(cfg: RunConfig, config: Config) -> ReportRecord:
    checks = self_test(config.tolerances.rel_tol)
    return ReportRecord(
        command="kernels-selftest", title="kernel self test",
        verdict=Verdict.IN if all(c.passed for c in checks) else Verdict.OUT,
        columns=["check", "passed", "detail"],
        rows=[[c.name, str(c.passed).lower(), c.detail] for c in checks],
    )


DISPATCH = {
    "classify": _classify,
    "potential": _potential,
    "embed": _embed,
    "fk": _fk,
    "b0": _b0,
    "kernels-selftest": _selftest,
}


def exit_code(record: ReportRecord, assert_in: bool) -> ExitCode:
    """0 pass, 1 fail (OUT under --assert-in, failed self test), 3 inconclusive."""
    if record.command == "kernels-selftest" and record.verdict == Verdict.OUT:
        return ExitCode.FAIL
    if record.verdict == Verdict.INCONCLUSIVE:
        return ExitCode.INCONCLUSIVE
    if record.verdict == Verdict.OUT and assert_in:
        return ExitCode.FAIL
    return ExitCode.PASS


def execute(config: RunConfig) -> Tuple[ReportRecord, Path]:
    """Run the command and write the report file (header block + deterministic body)."""
    setup_logging(config.log_level, config.log_file)
    logger.info(f"Running {config.command} (seed {config.seed}, {config.threads} worker(s))")
    record = DISPATCH[config.command](config, config.toolkit_config())
    suffix = "csv" if config.report_format == "csv" else "txt"
    path = Path(config.out_dir) / f"{config.command}.{suffix}"
    write_text(path, report_header(config) + report_body(record, config.report_format))
    logger.info(f"Report written to {path}")
    return record, path


def run(config: RunConfig) -> int:
    """Run one config; returns the exit code of the three-valued protocol."""
    record, _ = execute(config)
    return int(exit_code(record, config.assert_in))


# =============================================================================
# Commands
# =============================================================================

def _floats(text: Optional[str], field: str) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"'{text}' is not a comma-separated list of numbers", field) from None


def _load(command: str, config_file: Optional[Path], **fields) -> RunConfig:
    if config_file is None:
        return RunConfig.from_env(command, **fields)
    base = RunConfig.from_yaml(config_file)
    if base.command != command:
        raise ConfigurationError(f"config is for '{base.command}', not '{command}'", "command")
    data = base.model_dump(mode="python")
    data.update({k: v for k, v in fields.items() if v is not None})
    return _validated_run(data)


def _finish(config: RunConfig) -> None:
    record, path = execute(config)
    table, _ = report_render(record)
    console.print(table)
    if record.verdict is not None:
        style = {"IN": "bold green", "OUT": "bold red"}.get(record.verdict.value, "bold yellow")
        console.print(f"[{style}]Verdict: {record.verdict.value}[/{style}]")
    console.print(f"[green]Report saved to: {path}[/green]")
    code = exit_code(record, config.assert_in)
    if code != ExitCode.PASS:
        raise typer.Exit(int(code))


def _guarded(build):
    try:
        _finish(build())
    except typer.Exit:
        raise
    except (ToolkitError, ValidationError) as e:
        console.print(f"[bold red]Error: {e}[/bold red]")
        raise typer.Exit(int(ExitCode.USAGE))


ConfigOpt = typer.Option(None, "--config", "-c", help="Run config (YAML)")
SeedOpt = typer.Option(None, "--seed", help="Root seed")
ThreadsOpt = typer.Option(None, "--threads", help="Worker cap")
AssertOpt = typer.Option(False, "--assert-in", help="Exit 1 when the headline verdict is OUT")
OutOpt = typer.Option(None, "--out", help="Report directory")
FormatOpt = typer.Option(None, "--format", help="Report body: csv or record")


@app.command()
def classify(
    process: Optional[str] = typer.Option(None, "--process", help="e.g. brownian:d=3"),
    measure: Optional[str] = typer.Option(None, "--measure", help="e.g. lebesgue:ball(0,1)"),
    p: Optional[float] = typer.Option(None, "--p", help="Exponent p >= 1"),
    no_chen: bool = typer.Option(False, "--no-chen", help="Skip the Chen subset search"),
    config_file: Optional[Path] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    assert_in: bool = AssertOpt,
    out: Optional[str] = OutOpt,
    report_format: Optional[str] = FormatOpt,
):
    """Classify a measure into Kato, Dynkin and Green-tight classes."""
    _guarded(lambda: _load("classify", config_file, process=process, measure=measure, p=p,
                           chen=False if no_chen else None, seed=seed, threads=threads,
                           assert_in=assert_in or None, out_dir=out, report_format=report_format))


@app.command()
def potential(
    process: Optional[str] = typer.Option(None, "--process", help="e.g. stable:alpha=1,d=2"),
    measure: Optional[str] = typer.Option(None, "--measure", help="e.g. sphere:r=1,d=3"),
    p: Optional[float] = typer.Option(None, "--p", help="Exponent p >= 1"),
    point: Optional[str] = typer.Option(None, "--point", help="Comma-separated x; sup-search when omitted"),
    order: Optional[float] = typer.Option(None, "--order", help="Resolvent order (Green kernel when omitted)"),
    config_file: Optional[Path] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    assert_in: bool = AssertOpt,
    out: Optional[str] = OutOpt,
    report_format: Optional[str] = FormatOpt,
):
    """Evaluate (or maximize) a p-potential."""
    _guarded(lambda: _load("potential", config_file, process=process, measure=measure, p=p,
                           point=_floats(point, "point"), order=order, seed=seed, threads=threads,
                           assert_in=assert_in or None, out_dir=out, report_format=report_format))


@app.command()
def embed(
    domain: Optional[str] = typer.Option(None, "--domain", help="e.g. horn:exp,rate=1,d=2"),
    process: Optional[str] = typer.Option(None, "--process", help="Jump process for nonlocal forms"),
    k: Optional[int] = typer.Option(None, "--k", help="Number of singular values"),
    h: Optional[float] = typer.Option(None, "--h", help="Grid spacing of truncation studies"),
    lengths: Optional[str] = typer.Option(None, "--lengths", help="Comma-separated truncation lengths"),
    dimension: Optional[int] = typer.Option(None, "--dimension", "-d", help="Dimension when the domain omits it"),
    config_file: Optional[Path] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    assert_in: bool = AssertOpt,
    out: Optional[str] = OutOpt,
    report_format: Optional[str] = FormatOpt,
):
    """Embedding singular values: refined spectrum (bounded) or truncation study (unbounded)."""
    _guarded(lambda: _load("embed", config_file, domain=domain, process=process, k=k, h=h,
                           lengths=_floats(lengths, "lengths"), dimension=dimension, seed=seed,
                           threads=threads, assert_in=assert_in or None, out_dir=out,
                           report_format=report_format))


@app.command()
def fk(
    process: Optional[str] = typer.Option(None, "--process", help="e.g. brownian:d=1"),
    potential_: Optional[str] = typer.Option(None, "--potential", help="e.g. harmonic or constant,scale=1"),
    t: Optional[float] = typer.Option(None, "--t", help="Single time; decay ladder when omitted"),
    times: Optional[str] = typer.Option(None, "--times", help="Comma-separated time ladder"),
    point: Optional[str] = typer.Option(None, "--point", help="Starting point (origin when omitted)"),
    domain: Optional[str] = typer.Option(None, "--domain", help="Killing domain"),
    paths: Optional[int] = typer.Option(None, "--paths", help="Number of sample paths"),
    config_file: Optional[Path] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    out: Optional[str] = OutOpt,
    report_format: Optional[str] = FormatOpt,
):
    """Feynman-Kac semigroup values or the decay rate of P_t^{-V} 1."""
    def build():
        mc = None
        if paths is not None:
            mc = MonteCarloConfig(**{**Config.from_env().monte_carlo.model_dump(), "paths": paths}).model_dump()
        return _load("fk", config_file, process=process, potential=potential_, t=t,
                     times=_floats(times, "times"), point=_floats(point, "point"), domain=domain,
                     monte_carlo=mc, seed=seed, threads=threads, out_dir=out, report_format=report_format)

    _guarded(build)


@app.command("b0")
def b0_command(
    domain: Optional[str] = typer.Option(None, "--domain", help="e.g. strip:w=1,d=2"),
    radii: Optional[str] = typer.Option(None, "--radii", help="Comma-separated R values"),
    dimension: Optional[int] = typer.Option(None, "--dimension", "-d", help="Dimension when the domain omits it"),
    config_file: Optional[Path] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    assert_in: bool = AssertOpt,
    out: Optional[str] = OutOpt,
    report_format: Optional[str] = FormatOpt,
):
    """B0 profile of a domain (IN: the domain belongs to B0)."""
    _guarded(lambda: _load("b0", config_file, domain=domain, radii=_floats(radii, "radii"), dimension=dimension,
                           seed=seed, threads=threads, assert_in=assert_in or None, out_dir=out,
                           report_format=report_format))


@app.command("kernels-selftest")
def kernels_selftest(
    out: Optional[str] = OutOpt,
    report_format: Optional[str] = FormatOpt,
):
    """Run the kernel identity suite; exit 1 on any failure."""
    _guarded(lambda: _load("kernels-selftest", None, out_dir=out, report_format=report_format))


@app.command("run")
def run_command(
    config_file: Path = typer.Option(..., "--config", "-c", help="Run config (YAML)"),
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    assert_in: bool = AssertOpt,
    out: Optional[str] = OutOpt,
):
    """Run whatever command a config document describes."""
    def build():
        base = RunConfig.from_yaml(config_file)
        return _load(base.command, config_file, seed=seed, threads=threads,
                     assert_in=assert_in or None, out_dir=out)

    _guarded(build)


@app.command()
def config_template(
    output_file: Path = typer.Option("kato.yaml", "--output", "-o", help="Output file path"),
    command: str = typer.Option("classify", "--command", help="Command the template is for"),
):
    """Generate a run config template."""
    examples = {
        "classify": dict(process="brownian:d=3", measure="lebesgue:ball(0,1)", p=1.0),
        "potential": dict(process="brownian:d=3", measure="lebesgue:ball(0,1)", point=[0.0, 0.0, 0.0]),
        "embed": dict(domain="horn:exp,rate=1,d=2"),
        "fk": dict(process="brownian:d=1", potential="harmonic"),
        "b0": dict(domain="strip:w=1,d=2"),
        "kernels-selftest": {},
    }
    if command not in examples:
        console.print(f"[bold red]Error: unknown command '{command}'[/bold red]")
        raise typer.Exit(int(ExitCode.USAGE))
    template = RunConfig(command=command, **examples[command]).model_dump(mode="python")

    with open(output_file, "w") as f:
        yaml.dump(template, f, default_flow_style=False)

    console.print(f"[green]Template saved to: {output_file}[/green]")


@app.command()
def fit_envelope(
    alpha: float = typer.Option(..., "--alpha", help="Stability index"),
    m: float = typer.Option(..., "--m", help="Relativistic mass"),
    dimension: int = typer.Option(..., "--dimension", "-d", help="Dimension"),
    save: bool = typer.Option(False, "--save", help="Merge the fit into the packaged constants file"),
    constants_file: Optional[Path] = typer.Option(None, "--file", help="Constants file to update"),
):
    """Fit the two-sided heat kernel envelope constants (C1, C2) of a relativistic process."""
    try:
        setup_logging(os.getenv("KATO_LOG_LEVEL", "INFO"))
        entry = fit_envelope_constants(alpha, m, dimension)

        table = Table(title="Envelope constants")
        table.add_column("Property", style="cyan")
        table.add_column("Value", style="green")
        table.add_row("alpha", format_float(alpha))
        table.add_row("m", format_float(m))
        table.add_row("d", str(dimension))
        table.add_row("C1", format_float(entry.C1))
        table.add_row("C2", format_float(entry.C2))
        console.print(table)

        if save or constants_file is not None:
            path = save_envelope_constants([entry], constants_file)
            console.print(f"[green]Constants saved to: {path}[/green]")
    except (ToolkitError, ValidationError) as e:
        console.print(f"[bold red]Error: {e}[/bold red]")
        raise typer.Exit(int(ExitCode.USAGE))


if __name__ == "__main__":
    app()
