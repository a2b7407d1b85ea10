import json
import logging
import os
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ._errors import InvariantViolation
from ._utility import ensure_directory_exists

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = '%.17g'


class PropertyCheck(BaseModel):
    """Verdict of a single property together with the two sides compared."""
    name: str
    passed: bool
    detail: str = ''
    lhs: Optional[float] = None
    rhs: Optional[float] = None


class PropertyReport(BaseModel):
    """Ordered collection of pass/fail verdicts about one subject."""
    subject: str
    checks: List[PropertyCheck] = []

    def add(self, name, passed, detail='', lhs=None, rhs=None):
        self.checks.append(PropertyCheck(
            name=name, passed=bool(passed), detail=detail,
            lhs=None if lhs is None else float(lhs),
            rhs=None if rhs is None else float(rhs)))
        return self

    def extend(self, other, prefix=''):
        for check in other.checks:
            self.checks.append(check.model_copy(update={'name': f'{prefix}{check.name}'}))
        return self

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    def failures(self):
        return [check for check in self.checks if not check.passed]

    def __getitem__(self, name):
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def __contains__(self, name):
        return any(check.name == name for check in self.checks)

    def to_frame(self):
        return pd.DataFrame([check.model_dump() for check in self.checks],
                            columns=['name', 'passed', 'detail', 'lhs', 'rhs'])

    def require(self):
        """Raise InvariantViolation naming every failed check."""
        failed = self.failures()
        if failed:
            names = ', '.join(check.name for check in failed)
            raise InvariantViolation(f"{self.subject}: failed checks: {names}")
        return self


def _json_default(obj):
    if isinstance(obj, BaseModel):
        return obj.model_dump()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, pd.DataFrame):
        return obj.to_dict(orient='records')
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def to_json(payload):
    return json.dumps(payload, indent=4, default=_json_default, ensure_ascii=False)


def write_json(payload, file_path):
    """Write ``payload`` as JSON; floats keep their round-trip repr."""
    ensure_directory_exists(os.path.dirname(file_path) or '.')
    with open(file_path, 'w', encoding='utf-8') as f:
        f.write(to_json(payload))
        f.write('\n')
    logger.info("JSON written to %s", file_path)
    return file_path


def write_csv(df: pd.DataFrame, file_path):
    """Write ``df`` as CSV with '.' decimals and 17 significant digits."""
    ensure_directory_exists(os.path.dirname(file_path) or '.')
    df.to_csv(file_path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    logger.info("CSV written to %s", file_path)
    return file_path


def emit_outputs(output_dir, name, payload, tables: Dict[str, pd.DataFrame] = None, output_format='json'):
    """
    Write the outputs of one command.

    Args:
        output_dir: Directory receiving the files.
        name: Stem of the JSON report (``<name>.json``).
        payload: JSON-serialisable report body.
        tables: Mapping of CSV stem to DataFrame.
        output_format: 'json', 'csv' or 'both'.

    Returns:
        List of written file paths.
    """
    if output_format not in ('json', 'csv', 'both'):
        raise ValueError(f"Invalid output format '{output_format}'. Choose 'json', 'csv' or 'both'.")
    written = []
    if output_format in ('json', 'both'):
        written.append(write_json(payload, os.path.join(output_dir, f'{name}.json')))
    if output_format in ('csv', 'both'):
        for stem, df in (tables or {}).items():
            written.append(write_csv(df, os.path.join(output_dir, f'{stem}.csv')))
    return written
