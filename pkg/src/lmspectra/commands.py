import logging
from datetime import datetime, timezone
from typing import Callable, Dict, Optional

from pydantic import BaseModel, Field, model_validator

from lmspectra import settings
from lmspectra.adjacency import build_matrix, complete_eigensystem
from lmspectra.cells import dump_complex, sample_complex
from lmspectra.errors import InvalidParameterError
from lmspectra.exporters import esd_to_csv, graph_record, graph_to_dot, histogram_to_json, \
    matrix_to_coordinate_text, moment_table_text, to_json
from lmspectra.limits import compare_line_graph_to_dgw, mass_transport_check, sample_dgw, survival_fraction
from lmspectra.lm_types import GWConfig, HistogramMode, MatrixKind, OffspringLaw, OutputFormat, SampleMode
from lmspectra.spectra import atom_detect, eigenvalues_dense, esd_moment, figure_panels, frobenius_normalized, \
    histogram, moment_root_sampled
from lmspectra.words import enumerate_tilde_W, enumerate_W, moment_table

logger = logging.getLogger(__name__)

COMMANDS = ("sample-complex", "spectrum", "moments", "enumerate-words", "beta", "complete-eigs",
            "lwc-compare", "dgw-sample", "mass-transport", "survival", "figure1")


class RunConfig(BaseModel):
    """Validated command-line parameters"""
    command: str
    d: int = Field(default=2, ge=1)
    n: Optional[int] = Field(default=None, ge=2)
    p: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    lam: Optional[float] = Field(default=None, ge=0.0)
    k: int = Field(default=4, ge=1)
    seed: int = settings.DEFAULT_SEED
    samples: int = Field(default=1000, ge=1)
    depth: int = Field(default=2, ge=0)
    bins: int = Field(default=50, ge=1)
    dense_cap: int = Field(default=settings.DENSE_CAP, gt=0)
    vertex_cap: int = Field(default=settings.VERTEX_CAP, gt=0)
    format: OutputFormat = OutputFormat.JSON
    out: Optional[str] = None
    threads: Optional[int] = Field(default=None, ge=1)
    deterministic: bool = False
    kind: MatrixKind = MatrixKind.UNSIGNED
    full: bool = False
    offspring: OffspringLaw = OffspringLaw.POISSON
    blocks: int = Field(default=2, ge=0)
    tol: float = Field(default=settings.ATOM_TOL, gt=0.0)

    @model_validator(mode="after")
    def _check(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.p is not None and self.lam is not None:
            raise ValueError("give either --p or --lambda, not both")
        return self

    def require_n(self) -> int:
        if self.n is None:
            raise InvalidParameterError(f"{self.command} needs --n")
        return self.n

    def effective_p(self) -> float:
        """--p, or λ/n from --lambda."""
        if self.p is not None:
            return self.p
        if self.lam is None:
            raise InvalidParameterError(f"{self.command} needs --p or --lambda")
        return min(self.lam / self.require_n(), 1.0)

    def require_lam(self) -> float:
        if self.lam is not None:
            return self.lam
        if self.p is not None and self.n is not None:
            return self.p * self.n
        raise InvalidParameterError(f"{self.command} needs --lambda")


class CommandResult(BaseModel):
    """Main artifact, optional side files and the one-line summary"""
    content: str
    summary: str
    files: Dict[str, str] = {}


def _envelope(cfg: RunConfig, body: dict) -> str:
    payload = {"command": cfg.command, **body}
    if not cfg.deterministic:
        payload["generated_at"] = datetime.now(timezone.utc).isoformat()
    return to_json(payload)


def _check_format(cfg: RunConfig, *allowed: OutputFormat) -> None:
    if cfg.format not in allowed:
        raise InvalidParameterError(f"{cfg.command} supports --format {[f.value for f in allowed]}, "
                                    f"got {cfg.format.value}")


def run_sample_complex(cfg: RunConfig) -> CommandResult:
    _check_format(cfg, OutputFormat.JSON, OutputFormat.CSV)
    n, p = cfg.require_n(), cfg.effective_p()
    sample = sample_complex(n, cfg.d, p, cfg.seed)
    summary = f"n={n} d={cfg.d} p={p:g} seed={sample.seed}: {sample.present_count} of {sample.num_dcells} d-cells"
    if cfg.format == OutputFormat.CSV:
        return CommandResult(content=matrix_to_coordinate_text(build_matrix(sample, cfg.kind), cfg.dense_cap),
                             summary=summary)
    return CommandResult(content=_envelope(cfg, dump_complex(sample)), summary=summary)


def run_spectrum(cfg: RunConfig) -> CommandResult:
    _check_format(cfg, OutputFormat.JSON, OutputFormat.CSV)
    n, p = cfg.require_n(), cfg.effective_p()
    sample = sample_complex(n, cfg.d, p, cfg.seed)
    matrix = build_matrix(sample, cfg.kind)
    esd = eigenvalues_dense(matrix, dense_cap=cfg.dense_cap)
    summary = f"{cfg.kind.value} spectrum n={n} d={cfg.d} p={p:g} seed={sample.seed}: dim {esd.dim}"
    if cfg.format == OutputFormat.CSV:
        return CommandResult(content=esd_to_csv(esd), summary=summary)
    body = {
        "meta": esd.meta.model_dump(mode="json"),
        "eigenvalues": esd.eigenvalues,
        "moments": {str(k): esd_moment(esd, k).value for k in range(1, 5)},
        "frobenius_normalized": frobenius_normalized(matrix),
        "atoms": [atom.model_dump() for atom in atom_detect(esd, cfg.tol)],
        "histogram": histogram(esd, cfg.bins, HistogramMode.DENSITY).model_dump(mode="json", exclude={"meta"}),
    }
    return CommandResult(content=_envelope(cfg, body), summary=summary)


def run_moments(cfg: RunConfig) -> CommandResult:
    _check_format(cfg, OutputFormat.JSON)
    n, p = cfg.require_n(), cfg.effective_p()
    sample = sample_complex(n, cfg.d, p, cfg.seed, mode=SampleMode.LAZY)
    estimate = moment_root_sampled(sample, cfg.kind, cfg.k, cfg.samples, seed=cfg.seed, threads=cfg.threads)
    body = {"n": n, "d": cfg.d, "p": p, "seed": sample.seed, "kind": cfg.kind.value,
            "estimate": estimate.model_dump(mode="json")}
    if p > 0:
        body["scaled"] = estimate.value / (n * p * cfg.d) ** (cfg.k / 2)
    summary = f"m_{cfg.k} ({cfg.kind.value}) = {estimate.value:.6f} ± {estimate.stderr:.6f}, seed={sample.seed}"
    return CommandResult(content=_envelope(cfg, body), summary=summary)


def run_enumerate_words(cfg: RunConfig) -> CommandResult:
    _check_format(cfg, OutputFormat.JSON, OutputFormat.TABLE)
    if cfg.format == OutputFormat.TABLE:
        table = moment_table(cfg.d, cfg.k, threads=cfg.threads)
        return CommandResult(content=moment_table_text(cfg.d, table), summary=f"W~ table d={cfg.d} k<={cfg.k}")
    tilde = enumerate_tilde_W(cfg.d, cfg.k, threads=cfg.threads)
    body = {"d": cfg.d, "k": cfg.k, "tilde": {str(s): c for s, c in tilde.coefficients.items()}}
    if cfg.full:
        body["full"] = {str(s): c for s, c in enumerate_W(cfg.d, cfg.k, threads=cfg.threads).items()}
    return CommandResult(content=_envelope(cfg, body),
                         summary=f"d={cfg.d} k={cfg.k}: {sum(tilde.coefficients.values())} classes in W~")


def run_beta(cfg: RunConfig) -> CommandResult:
    _check_format(cfg, OutputFormat.JSON)
    lam = cfg.require_lam()
    if lam <= 0:
        raise InvalidParameterError(f"lambda must be positive, got {lam}")
    poly = enumerate_tilde_W(cfg.d, cfg.k, threads=cfg.threads)
    value = poly.value(lam)
    body = {"d": cfg.d, "k": cfg.k, "lambda": lam, "beta": value,
            "coefficients": {str(s): c for s, c in poly.coefficients.items()}}
    return CommandResult(content=_envelope(cfg, body), summary=f"beta_{cfg.k}({lam:g}) = {value:g} for d={cfg.d}")


def run_complete_eigs(cfg: RunConfig) -> CommandResult:
    _check_format(cfg, OutputFormat.JSON)
    n = cfg.require_n()
    kind = MatrixKind.COMPLETE_SIGNED if cfg.kind.is_signed else MatrixKind.COMPLETE_UNSIGNED
    system = complete_eigensystem(n, cfg.d, kind)
    body = {"n": n, "d": cfg.d, "kind": kind.value,
            "eigenvalues": [pair.model_dump() for pair in system.pairs]}
    return CommandResult(content=_envelope(cfg, body),
                         summary=f"{kind.value} n={n} d={cfg.d}: {len(system.pairs)} distinct eigenvalues")


def run_lwc_compare(cfg: RunConfig) -> CommandResult:
    _check_format(cfg, OutputFormat.JSON)
    n, lam = cfg.require_n(), cfg.require_lam()
    report = compare_line_graph_to_dgw(n, cfg.d, lam, cfg.depth, cfg.samples, seed=cfg.seed, threads=cfg.threads)
    summary = f"n={n} d={cfg.d} λ={lam:g} t={cfg.depth} seed={cfg.seed}: TV = {report.tv:.4f}"
    return CommandResult(content=_envelope(cfg, report.model_dump(mode="json")), summary=summary)


def _gw_config(cfg: RunConfig) -> GWConfig:
    return GWConfig(d=cfg.d, lam=cfg.require_lam(), depth=cfg.depth, vertex_cap=cfg.vertex_cap, seed=cfg.seed,
                    offspring=cfg.offspring, fixed_blocks=cfg.blocks)


def run_dgw_sample(cfg: RunConfig) -> CommandResult:
    _check_format(cfg, OutputFormat.JSON, OutputFormat.DOT)
    gw = _gw_config(cfg)
    graph = sample_dgw(gw)
    summary = f"dGW d={gw.d} λ={gw.lam:g} depth={gw.depth} seed={gw.seed}: {graph.num_vertices} vertices"
    if cfg.format == OutputFormat.DOT:
        return CommandResult(content=graph_to_dot(graph, name="dgw"), summary=summary)
    return CommandResult(content=_envelope(cfg, graph_record(graph)), summary=summary)


def run_mass_transport(cfg: RunConfig) -> CommandResult:
    _check_format(cfg, OutputFormat.JSON)
    result = mass_transport_check(cfg.d, cfg.require_lam(), f"f{cfg.k}", cfg.samples, seed=cfg.seed,
                                  offspring=cfg.offspring, fixed_blocks=cfg.blocks, threads=cfg.threads)
    body = {**result.model_dump(), "holds": result.holds(), "offspring": cfg.offspring.value, "seed": cfg.seed}
    summary = (f"{result.f_id} d={cfg.d} seed={cfg.seed}: lhs {result.lhs:.4f} rhs {result.rhs:.4f} "
               f"± {result.stderr:.4f} ({'holds' if result.holds() else 'violated'})")
    return CommandResult(content=_envelope(cfg, body), summary=summary)


def run_survival(cfg: RunConfig) -> CommandResult:
    _check_format(cfg, OutputFormat.JSON)
    lam = cfg.require_lam()
    fraction = survival_fraction(cfg.d, lam, depth_cap=cfg.depth, vertex_cap=cfg.vertex_cap,
                                 samples=cfg.samples, seed=cfg.seed)
    body = {"d": cfg.d, "lambda": lam, "depth_cap": cfg.depth, "vertex_cap": cfg.vertex_cap,
            "samples": cfg.samples, "seed": cfg.seed, "die_out_fraction": fraction}
    return CommandResult(content=_envelope(cfg, body),
                         summary=f"d={cfg.d} λ={lam:g} seed={cfg.seed}: die-out fraction {fraction:.4f}")


def run_figure1(cfg: RunConfig) -> CommandResult:
    _check_format(cfg, OutputFormat.JSON)
    n = cfg.n or 100
    panels = figure_panels(n=n, d=cfg.d, bins=cfg.bins, seed=cfg.seed, dense_cap=cfg.dense_cap)
    files = {f"{name}.json": histogram_to_json(panel) for name, panel in panels.items()}
    body = {"n": n, "d": cfg.d, "seed": cfg.seed,
            "panels": {name: panel.model_dump(mode="json") for name, panel in panels.items()}}
    return CommandResult(content=_envelope(cfg, body), files=files,
                         summary=f"figure panels n={n} d={cfg.d} seed={cfg.seed}: {len(panels)} histograms")


HANDLERS: Dict[str, Callable[[RunConfig], CommandResult]] = {
    "sample-complex": run_sample_complex,
    "spectrum": run_spectrum,
    "moments": run_moments,
    "enumerate-words": run_enumerate_words,
    "beta": run_beta,
    "complete-eigs": run_complete_eigs,
    "lwc-compare": run_lwc_compare,
    "dgw-sample": run_dgw_sample,
    "mass-transport": run_mass_transport,
    "survival": run_survival,
    "figure1": run_figure1,
}


def run_command(cfg: RunConfig) -> CommandResult:
    logger.info(f"[CLI] running {cfg.command} with seed {cfg.seed}")
    return HANDLERS[cfg.command](cfg)
