"""
bakerspec Utility Functions
Common utilities used across the project
"""

import sys
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import orjson
import pandas as pd
import xxhash
from loguru import logger

from config import config

CSV_FLOAT_FORMAT = '%.12g'


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None):
    """Configure loguru sinks from the logging config section

    Args:
        level: Override for the configured level
        log_file: Override for the configured log file (None keeps config value)
    """
    settings = config.get_logging_config()
    level = level or settings.get('level', 'INFO')
    log_file = log_file or settings.get('file')
    fmt = settings.get('format')

    logger.remove()
    logger.add(sys.stderr, level=level, format=fmt)
    if log_file:
        ensure_directory(Path(log_file).parent)
        logger.add(
            log_file,
            level=level,
            format=fmt,
            rotation=settings.get('max_size', '10 MB'),
            retention=settings.get('retention', '30 days'),
        )
    logger.debug(f"Logging configured (level={level}, file={log_file})")


def ensure_directory(path: Union[str, Path]) -> Path:
    """Ensure directory exists, create if it doesn't

    Args:
        path: Directory path

    Returns:
        Path object
    """
    path_obj = Path(path)
    path_obj.mkdir(parents=True, exist_ok=True)
    return path_obj


def get_timestamp() -> float:
    """Get current timestamp"""
    return time.time()


def format_timestamp(timestamp: float, format_str: str = "%Y-%m-%d %H:%M:%S") -> str:
    """Format timestamp to readable string"""
    return datetime.fromtimestamp(timestamp).strftime(format_str)


def _json_default(obj: Any) -> Any:
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (tuple, set, frozenset)):
        return list(obj)
    raise TypeError(f"Type is not JSON serializable: {type(obj).__name__}")


def canonical_json(data: Any) -> bytes:
    """Serialize to sorted-key JSON bytes; identical inputs give identical bytes"""
    return orjson.dumps(
        data,
        default=_json_default,
        option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY,
    )


def content_hash(data: Any) -> str:
    """Content address of a JSON-serializable record

    Args:
        data: Record to hash

    Returns:
        16-character xxhash64 hex digest of the canonical serialization
    """
    return xxhash.xxh64(canonical_json(data)).hexdigest()


def safe_json_load(file_path: Union[str, Path], default: Any = None) -> Any:
    """Safely load JSON file with error handling

    Args:
        file_path: Path to JSON file
        default: Default value if loading fails

    Returns:
        Loaded JSON data or default
    """
    try:
        with open(file_path, 'rb') as f:
            return orjson.loads(f.read())
    except Exception as e:
        logger.warning(f"Error loading JSON from {file_path}: {e}")
        return default


def safe_json_save(data: Any, file_path: Union[str, Path]) -> bool:
    """Safely save data to JSON file

    Args:
        data: Data to save
        file_path: Path to save file

    Returns:
        True if successful, False otherwise
    """
    try:
        ensure_directory(Path(file_path).parent)
        payload = orjson.dumps(
            data,
            default=_json_default,
            option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY,
        )
        with open(file_path, 'wb') as f:
            f.write(payload)
        return True
    except Exception as e:
        logger.error(f"Error saving JSON to {file_path}: {e}")
        return False


def write_csv(frame: pd.DataFrame, file_path: Union[str, Path]) -> Path:
    """Write a table with the repository's fixed float format

    Args:
        frame: Table to write
        file_path: Destination path

    Returns:
        Path written
    """
    path = Path(file_path)
    ensure_directory(path.parent)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path

