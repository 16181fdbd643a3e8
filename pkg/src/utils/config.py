import logging
import os

import toml

logger = logging.getLogger(__name__)

CONFIG_PATH = "config.toml"
WORKERS_ENV = "SCALING_WORKERS"


def load_config(path=CONFIG_PATH):
    if not os.path.exists(path):
        logger.warning("[Config] %s not found. Using defaults.", path)
        return {}

    try:
        return toml.load(path)
    except (toml.TomlDecodeError, OSError) as e:
        logger.warning("[Config] Error loading %s: %s", path, e)
        return {}


def worker_count():
    """Worker threads for sweeps: $SCALING_WORKERS, then [Workers] count, then all cores."""
    override = os.environ.get(WORKERS_ENV, "").strip()
    if override:
        try:
            value = int(override)
        except ValueError:
            logger.warning("[Config] Ignoring non-integer %s=%r", WORKERS_ENV, override)
        else:
            if value > 0:
                return value
    count = int(config.get("Workers", {}).get("count", 0) or 0)
    return count if count > 0 else (os.cpu_count() or 1)


# Global instance for easy access
config = load_config()
