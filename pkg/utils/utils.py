from datetime import datetime, timezone as dt_tz
import json
from pathlib import Path

import numpy as np
from django.core.management.base import CommandError

from utils.errors import FemtoPauliError, OutputError
from utils.logger import Logger

logger = Logger(__name__).logger


def utc_timestamp():
    return datetime.now(tz=dt_tz.utc).isoformat()


def to_command_error(error):
    '''
    Translate a domain error into the CommandError the management commands raise.
    The message starts with the bracketed category so callers can parse it.
    '''
    if isinstance(error, FemtoPauliError):
        return CommandError(f'[{error.category}] {error.message}', returncode=error.exit_code)
    return CommandError(f'[internal] {str(error)}', returncode=1)


def ensure_directory(path):
    directory = Path(path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        logger.exception(f'Could not create output directory {directory}: {str(e)}')
        raise OutputError(f'cannot create directory {directory}: {e}') from e
    return directory


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def write_json(path, payload):
    try:
        with open(path, 'w') as handle:
            json.dump(payload, handle, indent=2, default=_json_default)
    except OSError as e:
        logger.exception(f'Error while writing {path}: {str(e)}')
        raise OutputError(f'cannot write {path}: {e}') from e


def read_json(path):
    try:
        with open(path) as handle:
            return json.load(handle)
    except FileNotFoundError as e:
        raise OutputError(f'file not found: {path}') from e
    except json.JSONDecodeError as e:
        raise OutputError(f'{path} is not valid JSON: {e}') from e


def jsonable(payload):
    return json.loads(json.dumps(payload, default=_json_default))
