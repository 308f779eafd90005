import logging
import os

from dotenv import load_dotenv

from lmspectra.errors import InvalidParameterError

logger = logging.getLogger(__name__)

# load env variables
load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw, 0)  # accepts 0x-prefixed seeds
    except ValueError:
        raise InvalidParameterError(f"{name} must be an integer, got {raw!r}")


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise InvalidParameterError(f"{name} must be a number, got {raw!r}")


DEFAULT_SEED = _env_int("LM_SPECTRA_SEED", 0xC0FFEE)

# spectra
DENSE_CAP = _env_int("LM_SPECTRA_DENSE_CAP", 6000)
ATOM_TOL = _env_float("LM_SPECTRA_ATOM_TOL", 1e-8)
KS_TOL = _env_float("LM_SPECTRA_KS_TOL", 0.05)
RESIDUAL_CHECK_MAX_DIM = _env_int("LM_SPECTRA_RESIDUAL_CHECK_MAX_DIM", 2000)
COMPLETE_TABLE_CAP = _env_int("LM_SPECTRA_COMPLETE_TABLE_CAP", 5_000_000)

# local exploration
VERTEX_CAP = _env_int("LM_SPECTRA_VERTEX_CAP", 200_000)
ROOT_WORK_CAP = _env_int("LM_SPECTRA_ROOT_WORK_CAP", 500_000)
ROW_CACHE_SIZE = _env_int("LM_SPECTRA_ROW_CACHE_SIZE", 20_000)  # rows kept per root-sampling run
SIGNATURE_EXACT_MAX = _env_int("LM_SPECTRA_SIGNATURE_EXACT_MAX", 64)

# word enumeration
ENUM_NODE_CAP = _env_int("LM_SPECTRA_ENUM_NODE_CAP", 200_000_000)

# runtime
THREADS = _env_int("LM_SPECTRA_THREADS", 1)
LOG_LEVEL = os.getenv("LM_SPECTRA_LOG_LEVEL", "INFO").upper()
LOG_FILE = os.getenv("LM_SPECTRA_LOG_FILE", "")

for _name, _value in (("LM_SPECTRA_DENSE_CAP", DENSE_CAP), ("LM_SPECTRA_VERTEX_CAP", VERTEX_CAP),
                      ("LM_SPECTRA_ROOT_WORK_CAP", ROOT_WORK_CAP), ("LM_SPECTRA_ROW_CACHE_SIZE", ROW_CACHE_SIZE),
                      ("LM_SPECTRA_ENUM_NODE_CAP", ENUM_NODE_CAP),
                      ("LM_SPECTRA_THREADS", THREADS)):
    if _value <= 0:
        raise InvalidParameterError(f"{_name} must be positive, got {_value}")
