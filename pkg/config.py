# config.py

import os

from dotenv import load_dotenv

from cli import Toolkit

load_dotenv()

VERSION = "1.0.0"


def _env(name, default, cast=str):
    raw = os.environ.get(f"DURKIT_{name}")
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ValueError(f"DURKIT_{name}={raw!r} is not a valid {cast.__name__}") from None


class Config:
    # -------------------------------
    # Features
    # -------------------------------
    FRAME_SHIFT_MS = _env("FRAME_SHIFT_MS", 12.5, float)
    SILENCE_THRESHOLD_DB = _env("SILENCE_THRESHOLD_DB", -50.0, float)
    ENERGY_DIM = _env("ENERGY_DIM", 0, int)

    if FRAME_SHIFT_MS <= 0:
        raise ValueError("DURKIT_FRAME_SHIFT_MS must be positive!")
    if ENERGY_DIM < 0:
        raise ValueError("DURKIT_ENERGY_DIM must be a column index >= 0!")

    # -------------------------------
    # HMM training
    # -------------------------------
    EM_ITERS = _env("EM_ITERS", 10, int)
    SPLIT_ITERS = _env("SPLIT_ITERS", 3, int)
    SPLIT_EM_ITERS = _env("SPLIT_EM_ITERS", 2, int)
    MAX_GAUSSIANS = _env("MAX_GAUSSIANS", 8, int)
    VARIANCE_FLOOR_SCALE = _env("VARIANCE_FLOOR_SCALE", 1e-3, float)

    if min(EM_ITERS, SPLIT_ITERS, SPLIT_EM_ITERS) < 0 or MAX_GAUSSIANS < 1:
        raise ValueError("iteration counts must be >= 0 and DURKIT_MAX_GAUSSIANS >= 1!")
    if VARIANCE_FLOOR_SCALE <= 0:
        raise ValueError("DURKIT_VARIANCE_FLOOR_SCALE must be positive!")

    # -------------------------------
    # CTC
    # -------------------------------
    BLANK_FLOOR = _env("BLANK_FLOOR", 1e-8, float)
    BLANK_INDEX = _env("BLANK_INDEX", 0, int)

    if not 0 < BLANK_FLOOR <= 1:
        raise ValueError("DURKIT_BLANK_FLOOR must lie in (0, 1]!")

    # -------------------------------
    # Duration modification & upsampling
    # -------------------------------
    SIGMA_G = _env("SIGMA_G", 1.0, float)
    CLIP_LO = _env("CLIP_LO", 0.9, float)
    CLIP_HI = _env("CLIP_HI", 1.2, float)

    if SIGMA_G <= 0:
        raise ValueError("DURKIT_SIGMA_G must be positive!")
    if not CLIP_LO <= 1.0 <= CLIP_HI:
        raise ValueError("DURKIT_CLIP_LO / DURKIT_CLIP_HI must bracket 1!")

    # -------------------------------
    # Metrics
    # -------------------------------
    KLD_EPSILON = _env("KLD_EPSILON", 0.5, float)

    if KLD_EPSILON <= 0:
        raise ValueError("DURKIT_KLD_EPSILON must be positive!")

    # -------------------------------
    # Runtime
    # -------------------------------
    SEED = _env("SEED", 0, int)
    JOBS = _env("JOBS", 1, int)
    LOG_LEVEL = _env("LOG_LEVEL", "INFO").upper()
    DB_PATH = _env("DB_PATH", None)  # run ledger off unless set


# -------------------------------
# Create the toolkit app
# -------------------------------
app = Toolkit(
    "durkit",
    version=VERSION,
    defaults={"seed": Config.SEED, "jobs": Config.JOBS, "log_level": Config.LOG_LEVEL},
    ledger_path=Config.DB_PATH,
)

# Expose constants at top level
FRAME_SHIFT_MS = Config.FRAME_SHIFT_MS
