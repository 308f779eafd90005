import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from lmspectra import settings
from lmspectra.commands import COMMANDS, RunConfig, run_command
from lmspectra.errors import InvalidParameterError, ResourceCapError, SpectraError
from lmspectra.exporters import write_artifact
from lmspectra.lm_types import MatrixKind, OffspringLaw, OutputFormat

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CAP = 3


def configure_logging(level: str = settings.LOG_LEVEL) -> None:
    handlers = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_FILE:
        handlers.append(logging.FileHandler(settings.LOG_FILE))
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
    )


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int, default=2, help="cell dimension d")
    common.add_argument("--n", type=int, help="number of vertices")
    common.add_argument("--p", type=float, help="d-cell probability")
    common.add_argument("--lambda", dest="lam", type=float, help="np; implies p = lambda/n")
    common.add_argument("--k", type=int, default=4, help="moment order / word length")
    common.add_argument("--seed", type=lambda s: int(s, 0), default=settings.DEFAULT_SEED)
    common.add_argument("--samples", type=int, default=1000, help="roots or Monte Carlo samples")
    common.add_argument("--depth", type=int, default=2, help="ball radius or generation cap")
    common.add_argument("--bins", type=int, default=50)
    common.add_argument("--dense-cap", type=int, default=settings.DENSE_CAP)
    common.add_argument("--vertex-cap", type=int, default=settings.VERTEX_CAP)
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.JSON.value)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--threads", type=int, help="worker count (default: LM_SPECTRA_THREADS or 1)")
    common.add_argument("--deterministic", action="store_true", help="omit the generated_at timestamp")
    common.add_argument("--kind", choices=[k.value for k in MatrixKind], default=MatrixKind.UNSIGNED.value)
    common.add_argument("--full", action="store_true", help="also count W_s^k (enumerate-words)")
    common.add_argument("--offspring", choices=[o.value for o in OffspringLaw], default=OffspringLaw.POISSON.value)
    common.add_argument("--blocks", type=int, default=2, help="blocks per vertex for --offspring fixed")
    common.add_argument("--tol", type=float, default=settings.ATOM_TOL, help="atom clustering tolerance")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lm-spectra", description="Spectra and local limits of Linial-Meshulam complexes")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _write_side_files(out: Optional[str], files: dict) -> None:
    """Extra artifacts land next to --out (as a directory when it has no suffix)."""
    if out is None or not files:
        return
    target = Path(out)
    directory = target if not target.suffix else target.parent
    for name, content in files.items():
        write_artifact(content, directory / name)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID
    configure_logging()

    try:
        cfg = RunConfig(**vars(args))
        result = run_command(cfg)
        out = cfg.out
        if out is not None and cfg.command == "figure1" and not Path(out).suffix:
            out = str(Path(out) / "figure1.json")
        where = write_artifact(result.content, out)
        _write_side_files(cfg.out, result.files)
    except (ValidationError, InvalidParameterError) as e:
        logger.error(f"[CLI] invalid parameters: {e}")
        return EXIT_INVALID
    except ResourceCapError as e:
        logger.error(f"[CLI] resource cap reached: {e}")
        return EXIT_CAP
    except SpectraError as e:
        logger.error(f"[CLI] {args.command} failed: {e}", exc_info=True)
        return 1

    print(f"{cfg.command}: {result.summary} -> {where}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
