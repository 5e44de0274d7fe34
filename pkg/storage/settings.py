import logging
import os
import sys
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field


load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class OracleSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    log_level: str = Field(default="WARNING")
    # Overrides every bhat_i when set; the level size bound only holds for the formula value.
    ball_budget: Optional[int] = Field(default=None, ge=2)
    verify_workers: int = Field(default=4, ge=1, le=32)
    full_max_n: int = Field(default=200, ge=1)
    full_max_stages: int = Field(default=2000, ge=1)


def _optional_int(name: str) -> Optional[int]:
    raw = os.getenv(name, "").strip()
    if not raw:
        return None
    return int(raw)


def load_settings() -> OracleSettings:
    workers = int(os.getenv("ORACLE_VERIFY_WORKERS", "4"))
    return OracleSettings(
        log_level=os.getenv("ORACLE_LOG", "WARNING").upper(),
        ball_budget=_optional_int("ORACLE_BALL_BUDGET"),
        verify_workers=max(1, min(workers, 32)),  # clamp
        full_max_n=int(os.getenv("ORACLE_FULL_MAX_N", "200")),
        full_max_stages=int(os.getenv("ORACLE_FULL_MAX_STAGES", "2000")),
    )


def configure_logging(level: str = "WARNING") -> None:
    root = logging.getLogger()
    # Re-running the CLI in one process must not stack handlers
    for h in list(root.handlers):
        if getattr(h, "_oracle_handler", False):
            root.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._oracle_handler = True  # type: ignore[attr-defined]
    root.addHandler(handler)
    root.setLevel(getattr(logging, level.upper(), logging.WARNING))
