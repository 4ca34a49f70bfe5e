import os
from pathlib import Path

from dotenv import load_dotenv

from .errors import ConfigurationError

# ---------- SETUP ----------
BASE_DIR = Path(__file__).resolve().parent
load_dotenv(BASE_DIR / ".env")
load_dotenv(Path.cwd() / ".env")

LOG_LEVEL = os.getenv("HECKEENV_LOG_LEVEL", "INFO").upper()
CACHE_DIR = Path(os.getenv("HECKEENV_CACHE_DIR", "."))
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s"


def thread_count() -> int:
    """Worker threads for the per-prime convolutions (HECKEENV_THREADS, default CPU count)."""
    raw = os.getenv("HECKEENV_THREADS")
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"HECKEENV_THREADS must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ConfigurationError(f"HECKEENV_THREADS must be >= 1, got {value}")
    return value


def resolve_output(path: Path) -> Path:
    if path.is_absolute():
        return path
    return CACHE_DIR / path
