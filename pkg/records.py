"""Report rows.

One schema dict drives everything a result turns into: the row dataclasses,
the fixed CSV column order, and the SQLite tables of ``result_store``.
"""
import csv
import io
import json
import math
from dataclasses import asdict, astuple, field, make_dataclass
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from conjectures import ConjectureReport
from verification_harness import CheckResult

SCHEMA = {
    'runs': {
        'id': 'INTEGER PRIMARY KEY AUTOINCREMENT',
        'command': 'TEXT NOT NULL',
        'seed': 'INTEGER',
        'arguments': 'TEXT',
        'created_at': 'TIMESTAMP DEFAULT CURRENT_TIMESTAMP',
    },
    'check_results': {
        'id': 'INTEGER PRIMARY KEY AUTOINCREMENT',
        'run_id': 'INTEGER',
        'check_id': 'TEXT NOT NULL',
        'relation': 'TEXT',
        'anchor': 'TEXT',
        'params': 'TEXT',
        'lhs': 'REAL',
        'lhs_stderr': 'REAL',
        'lhs_syserr': 'REAL',
        'rhs': 'REAL',
        'rhs_stderr': 'REAL',
        'rhs_syserr': 'REAL',
        'constant': 'REAL',
        'ratio': 'REAL',
        'normalized_ratio': 'REAL',
        'stderr': 'REAL',
        'margin_sigma': 'REAL',
        'verdict': 'TEXT NOT NULL',
        'seed': 'INTEGER',
        'wall_time': 'REAL',
        'details': 'TEXT',
        'FOREIGN KEY(run_id)': 'REFERENCES runs(id) ON DELETE CASCADE',
    },
    'conjecture_reports': {
        'id': 'INTEGER PRIMARY KEY AUTOINCREMENT',
        'run_id': 'INTEGER',
        'target': 'TEXT NOT NULL',
        'family': 'TEXT NOT NULL',
        'n': 'INTEGER',
        'j': 'INTEGER',
        'k': 'INTEGER',
        'm': 'REAL',
        'bound': 'REAL',
        'best_ratio': 'REAL',
        'best_stderr': 'REAL',
        'normalized_ratio': 'REAL',
        'search_ratio': 'REAL',
        'violation_found': 'BOOLEAN',
        'best_params': 'TEXT',
        'members_evaluated': 'INTEGER',
        'members_skipped': 'INTEGER',
        'members_inconclusive': 'INTEGER',
        'evaluations': 'INTEGER',
        'seed': 'INTEGER',
        'options': 'TEXT',
        'wall_time': 'REAL',
        'FOREIGN KEY(run_id)': 'REFERENCES runs(id) ON DELETE CASCADE',
    },
}

# store bookkeeping, not report content
_STORE_ONLY = ('id', 'run_id', 'created_at')


def columns(table: str) -> List[str]:
    return [name for name in SCHEMA[table] if not name.startswith(('PRIMARY KEY', 'FOREIGN KEY', 'UNIQUE', 'CHECK'))]


def report_columns(table: str) -> List[str]:
    return [name for name in columns(table) if name not in _STORE_ONLY]


REPORT_COLUMNS = report_columns('check_results')
CONJECTURE_COLUMNS = report_columns('conjecture_reports')


def _str(self):
    """One 'Field Name: value' line per column."""
    info_lines = [
        f"{key.replace('_', ' ').title()}: {value if value is not None else 'N/A'}"
        for key, value in self.dc_dict().items()
    ]
    return "\n".join(info_lines)


def _dc_dict(self) -> Dict:
    return asdict(self)


def _dc_tuple(self) -> Tuple:
    return astuple(self)


def _report_dict(self) -> Dict:
    """Columns without store bookkeeping, JSON-typed."""
    return {key: value for key, value in asdict(self).items() if key not in _STORE_ONLY}


dc_funcs = {
    '__str__': _str,
    'dc_dict': _dc_dict,
    'dc_tuple': _dc_tuple,
    'report_dict': _report_dict,
}


class RecordDataClass:
    """Dynamic slotted row dataclasses from a table of the schema."""
    _instances = {}

    type_map = {
        'INTEGER': int,
        'TEXT': str,
        'REAL': float,
        'BOOLEAN': bool,
        'TIMESTAMP': str,
    }

    def field_type(self, sql_type: str):
        base = sql_type.split()[0].split('(')[0].upper()
        return self.type_map.get(base, str), field(default=None)

    def __call__(self, table: str):
        if table in RecordDataClass._instances:
            return RecordDataClass._instances[table]
        definitions = SCHEMA[table]
        prepared = [(name, *self.field_type(definitions[name])) for name in columns(table)]
        name = ''.join(part.capitalize() for part in table.split('_')) + 'Record'
        record = make_dataclass(name, prepared, namespace=dc_funcs, slots=True)
        RecordDataClass._instances[table] = record
        return record


RunRecord = RecordDataClass()('runs')
CheckRecord = RecordDataClass()('check_results')
ConjectureRecord = RecordDataClass()('conjecture_reports')


# Conversions

def _plain(value: Any) -> Any:
    """JSON-safe copy: numpy to Python, enums to values, non-finite floats to None."""
    if isinstance(value, Mapping):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    if hasattr(value, 'describe'):
        return _plain(value.describe())
    return str(value)


def dumps(value: Any) -> str:
    return json.dumps(_plain(value), sort_keys=True, ensure_ascii=False)


def check_record(result: CheckResult) -> CheckRecord:
    return CheckRecord(
        check_id=result.check_id, relation=result.relation.value, anchor=result.anchor,
        params=dumps(result.params),
        lhs=_plain(result.lhs.value), lhs_stderr=_plain(result.lhs.stderr), lhs_syserr=_plain(result.lhs.syserr),
        rhs=_plain(result.rhs.value), rhs_stderr=_plain(result.rhs.stderr), rhs_syserr=_plain(result.rhs.syserr),
        constant=_plain(result.constant), ratio=_plain(result.ratio),
        normalized_ratio=_plain(result.normalized_ratio), stderr=_plain(result.stderr),
        margin_sigma=_plain(result.margin_sigma), verdict=result.verdict.value, seed=result.seed,
        wall_time=result.wall_time, details=dumps(result.details))


def conjecture_record(report: ConjectureReport) -> ConjectureRecord:
    return ConjectureRecord(
        target=report.target.value, family=report.family, n=report.n, j=report.j, k=report.k, m=report.m,
        bound=_plain(report.bound), best_ratio=_plain(report.best_ratio), best_stderr=_plain(report.best_stderr),
        normalized_ratio=_plain(report.normalized_ratio), search_ratio=_plain(report.search_ratio),
        violation_found=report.violation_found, best_params=dumps(report.best_params),
        members_evaluated=report.members_evaluated, members_skipped=report.members_skipped,
        members_inconclusive=report.members_inconclusive, evaluations=report.evaluations, seed=report.seed,
        options=dumps(report.options), wall_time=report.wall_time)


def _expanded(row: Dict[str, Any]) -> Dict[str, Any]:
    """JSON report form: text columns holding JSON are nested back."""
    out = dict(row)
    for key in ('params', 'details', 'best_params', 'options'):
        if isinstance(out.get(key), str):
            out[key] = json.loads(out[key])
    return out


def render_json(records: Sequence[Any]) -> str:
    """Indented, key-sorted JSON; identical inputs give identical bytes."""
    rows = [_expanded(record.report_dict()) for record in records]
    return json.dumps(rows, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_csv(records: Sequence[Any], header: Iterable[str]) -> str:
    header = list(header)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for record in records:
        row = record.report_dict()
        writer.writerow(['' if row[key] is None else _csv_cell(row[key]) for key in header])
    return buffer.getvalue()


def _csv_cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
