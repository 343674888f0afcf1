"""Utility functions and constants for the exact LP solver."""

import configparser
import csv
import datetime
from enum import Enum
import json
import os
import pickle
from pathlib import Path
import sys
from typing import Any, Dict, Optional

# ==============================================================================
# CONFIGURATION DEFAULTS
# ==============================================================================
DEFAULT_LOG_FILE = ""  # empty: log to stderr only
DEFAULT_MODE = "ir-boosting"
VALID_MODES = ("ir-double", "boosting-pure", "ir-boosting")
DEFAULT_ALPHA = "1000000000000"  # 10^12, parsed exactly
DEFAULT_TIME_LIMIT = 7200.0
DEFAULT_ITERATION_LIMIT = 100000  # pivots per floating-point solve
DEFAULT_MAX_PRECISION = 1000
DEFAULT_FEAS_TOL = 1e-9
DEFAULT_OPT_TOL = 1e-9
DEFAULT_REFINE_ROUNDS = 50
DEFAULT_THREADS = 1
DEFAULT_UNBOUNDED_RETRY_BASIS = "original"
DEFAULT_CONFIG_FILE = "exactlp.conf"
CONFIG_SECTION = "exactlp"
CHECKPOINT_FILE = ".exactlp_bench_checkpoint.pkl"

TIME_SHIFT = 0.1       # seconds, shifted geometric mean of run times
ITERATION_SHIFT = 10   # pivots, shifted geometric mean of iteration counts


# ==============================================================================
# LOG LEVEL SYSTEM
# ==============================================================================
class LogLevel(Enum):
    DEBUG = 10
    INFO = 20
    WARNING = 30
    ERROR = 40


_LOG_LEVEL = LogLevel.INFO
_shutdown_requested = False


# ==============================================================================
# UTILITY FUNCTIONS
# ==============================================================================
def get_env_int(name: str, default: int) -> int:
    """Read integer environment variable `name`, returning `default` when missing or invalid."""
    try:
        return int(os.getenv(name, str(default)))
    except (TypeError, ValueError):
        return default


def set_log_level(level: str):
    """Set global log level from string."""
    global _LOG_LEVEL
    try:
        _LOG_LEVEL = LogLevel[level.upper()]
    except KeyError:
        _LOG_LEVEL = LogLevel.INFO


def is_enabled(level: LogLevel) -> bool:
    """Return True when messages at `level` pass the current threshold."""
    return level.value >= _LOG_LEVEL.value


def _structured_logs_enabled() -> bool:
    """Return True when structured (JSON) logging is enabled via environment variables."""
    log_format = os.getenv("EXACTLP_LOG_FORMAT", "").lower()
    if log_format == "json":
        return True
    flag = os.getenv("EXACTLP_STRUCTURED_LOGS", "").lower()
    return flag in ("1", "true", "yes", "on")


def default_log_file() -> str:
    return os.getenv("EXACTLP_LOG_FILE", DEFAULT_LOG_FILE)


def log(message: str, log_file: Optional[str] = None, level: LogLevel = LogLevel.INFO, extra: Optional[Dict[str, Any]] = None) -> None:
    """Log messages with level filtering and optional structured output.

    Lines go to stderr so that stdout stays reserved for solver results.
    """
    if level.value < _LOG_LEVEL.value:
        return

    now = datetime.datetime.now()
    ts_plain = now.strftime("%Y-%m-%d %H:%M:%S")
    level_str = level.name.ljust(7)

    if _structured_logs_enabled():
        payload: Dict[str, Any] = {
            "timestamp": now.isoformat(timespec="seconds"),
            "level": level.name,
            "message": message,
        }
        if extra:
            payload["extra"] = extra
        msg = json.dumps(payload, ensure_ascii=False, default=str)
    else:
        msg = f"[{ts_plain}] [{level_str}] {message}"
        if extra:
            msg = f"{msg} | {json.dumps(extra, ensure_ascii=False, default=str)}"

    print(msg, file=sys.stderr, flush=True)
    target = default_log_file() if log_file is None else log_file
    if not target:
        return
    try:
        with open(target, "a", encoding="utf-8") as f:
            f.write(msg + "\n")
    except (IOError, OSError) as e:
        print(f"Logging error: {e}", file=sys.stderr)


def signal_handler(signum, frame):
    """Handle shutdown signals gracefully."""
    global _shutdown_requested
    log(f"Received signal {signum}, finishing current instance and shutting down...",
        level=LogLevel.WARNING)
    _shutdown_requested = True


def shutdown_requested() -> bool:
    return _shutdown_requested


def save_checkpoint(finished: dict, log_file: Optional[str] = None, path: str = CHECKPOINT_FILE):
    """Save checkpoint of finished runs keyed by (instance, mode)."""
    try:
        with open(path, 'wb') as f:
            pickle.dump(finished, f)
        log(f"Checkpoint saved: {len(finished)} runs finished", log_file, LogLevel.DEBUG)
    except Exception as e:
        log(f"Failed to save checkpoint: {e}", log_file, LogLevel.WARNING)


def load_checkpoint(log_file: Optional[str] = None, path: str = CHECKPOINT_FILE) -> dict:
    """Load checkpoint of finished runs keyed by (instance, mode)."""
    if not Path(path).exists():
        return {}
    try:
        with open(path, 'rb') as f:
            finished = pickle.load(f)
        log(f"Resuming from checkpoint: {len(finished)} runs already finished", log_file, LogLevel.INFO)
        return finished
    except Exception as e:
        log(f"Failed to load checkpoint: {e}", log_file, LogLevel.WARNING)
        return {}


def config_defaults() -> Dict[str, str]:
    return {
        'EXACTLP_MODE': DEFAULT_MODE,
        'EXACTLP_ALPHA': DEFAULT_ALPHA,
        'EXACTLP_TIME_LIMIT': str(DEFAULT_TIME_LIMIT),
        'EXACTLP_ITERATION_LIMIT': str(DEFAULT_ITERATION_LIMIT),
        'EXACTLP_MAX_PRECISION': str(DEFAULT_MAX_PRECISION),
        'EXACTLP_FEAS_TOL': str(DEFAULT_FEAS_TOL),
        'EXACTLP_OPT_TOL': str(DEFAULT_OPT_TOL),
        'EXACTLP_REFINE_ROUNDS': str(DEFAULT_REFINE_ROUNDS),
        'EXACTLP_LOG_FILE': DEFAULT_LOG_FILE,
        'EXACTLP_LOG_LEVEL': 'INFO',
        'EXACTLP_THREADS': str(DEFAULT_THREADS),
        'EXACTLP_UNBOUNDED_RETRY_BASIS': DEFAULT_UNBOUNDED_RETRY_BASIS,
    }


def load_config(config_file: str = DEFAULT_CONFIG_FILE) -> dict:
    """Load configuration from a JSON, .env or INI file on top of the defaults."""
    defaults = config_defaults()

    def _decode_value(raw: str) -> str:
        """Return a decoded config value with matching quotes stripped (dotenv-style)."""
        decoded = raw
        if len(decoded) >= 2 and decoded[0] == decoded[-1] and decoded[0] in ("'", '"'):
            decoded = decoded[1:-1]
        return decoded

    cfg_path = Path(config_file)
    if not cfg_path.exists():
        return defaults

    suffix = cfg_path.suffix.lower()

    if suffix == ".json":
        try:
            data = json.loads(cfg_path.read_text(encoding="utf-8"))
            if isinstance(data, dict):
                for key, value in data.items():
                    if isinstance(key, str):
                        defaults[key.upper()] = _decode_value(str(value))
        except (json.JSONDecodeError, OSError, UnicodeDecodeError) as exc:
            log(f"Failed to load JSON config {config_file}: {exc}", level=LogLevel.WARNING)
        return defaults

    if suffix == ".env":
        try:
            for line in cfg_path.read_text(encoding="utf-8").splitlines():
                stripped = line.strip()
                if not stripped or stripped.startswith("#") or "=" not in stripped:
                    continue
                if stripped.startswith("export "):
                    stripped = stripped[len("export "):].strip()
                key_part, value_part = stripped.split("=", 1)
                defaults[key_part.strip().upper()] = _decode_value(value_part.strip())
        except (OSError, UnicodeDecodeError) as exc:
            log(f"Failed to load .env config {config_file}: {exc}", level=LogLevel.WARNING)
        return defaults

    config = configparser.ConfigParser()
    try:
        config.read(config_file)
    except configparser.Error as exc:
        log(f"Failed to load INI config {config_file}: {exc}", level=LogLevel.WARNING)
        return defaults
    if CONFIG_SECTION in config:
        for key, value in config[CONFIG_SECTION].items():
            defaults[key.upper()] = value

    return defaults


def resolve_setting(name: str, config: Dict[str, str]) -> str:
    """Environment variable wins over the config file value."""
    env_value = os.getenv(name)
    if env_value is not None and env_value != "":
        return env_value
    return config.get(name, config_defaults().get(name, ""))


def export_statistics(statistics: dict, log_file: Optional[str] = None, format: str = "json",
                      prefix: str = "exactlp_stats") -> str:
    """Export statistics to a timestamped file and return its name."""
    timestamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")

    if format == "json":
        stats_file = f"{prefix}_{timestamp}.json"
        with open(stats_file, 'w') as f:
            json.dump({
                'timestamp': timestamp,
                'statistics': statistics
            }, f, indent=2, default=str)
    elif format == "csv":
        stats_file = f"{prefix}_{timestamp}.csv"
        with open(stats_file, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['Timestamp', 'Metric', 'Value'])
            for key, value in statistics.items():
                writer.writerow([timestamp, key, value])
    else:
        raise ValueError(f"Unknown statistics format: {format}")

    log(f"Statistics exported to {stats_file}", log_file)
    return stats_file
