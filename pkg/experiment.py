"""Experiment files (schema version 1).

    {
      "schema_version": 1,
      "seed": 20240917,
      "checks": [
        {"check_id": "busemann", "params": {"n": 3, "k": 2},
         "budget": {"samples": 50000}, "tolerance": {"rel_tol": 0.02}}
      ],
      "output": {"format": "json", "path": "report.json"}
    }

Every key is checked; unknown ones are rejected rather than ignored.
"""
import json
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional

from config import Config
from errors import ExperimentFileError, KPlaneError
from logger import GetLogger
from verification_harness import CheckRegistry, CheckSpec, make_spec

logger = GetLogger()(name=__name__)

SCHEMA_VERSION = 1
FORMATS = ('json', 'csv')
TOP_LEVEL_KEYS = {'schema_version', 'seed', 'checks', 'output'}
CHECK_KEYS = {'check_id', 'params', 'budget', 'tolerance'}
BUDGET_KEYS = {'samples', 'order'}
TOLERANCE_KEYS = {'stat_sigma', 'rel_tol', 'inconclusive_fraction', 'roundoff_floor'}
OUTPUT_KEYS = {'format', 'path'}


@dataclass(frozen=True)
class Experiment:
    seed: int
    specs: List[CheckSpec]
    output_format: str = 'json'
    output_path: Optional[str] = None


class ExperimentValidator:
    @staticmethod
    def _keys(where: str, value: Any, allowed: set, required: set = frozenset()):
        if not isinstance(value, Mapping):
            raise ExperimentFileError(f"{where} must be an object")
        unknown = sorted(set(value) - allowed)
        if unknown:
            raise ExperimentFileError(f"unknown keys in {where}: {', '.join(unknown)}")
        missing = sorted(required - set(value))
        if missing:
            raise ExperimentFileError(f"missing keys in {where}: {', '.join(missing)}")

    @staticmethod
    def _positive_int(where: str, value: Any):
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise ExperimentFileError(f"{where} must be a positive integer, got {value!r}")

    @staticmethod
    def validate(document: Any) -> bool:
        """Structure of the whole file; raises ExperimentFileError on the first problem."""
        ExperimentValidator._keys('the experiment', document, TOP_LEVEL_KEYS, {'schema_version', 'checks'})
        if document['schema_version'] != SCHEMA_VERSION:
            raise ExperimentFileError(f"schema_version must be {SCHEMA_VERSION}, got {document['schema_version']!r}")
        seed = document.get('seed')
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
            raise ExperimentFileError(f"seed must be a non-negative integer, got {seed!r}")
        checks = document['checks']
        if not isinstance(checks, list) or not checks:
            raise ExperimentFileError("checks must be a non-empty list")
        known = set(CheckRegistry.ids())
        for index, check in enumerate(checks):
            where = f"checks[{index}]"
            ExperimentValidator._keys(where, check, CHECK_KEYS, {'check_id'})
            if check['check_id'] not in known:
                raise ExperimentFileError(f"{where}: unknown check id {check['check_id']!r}")
            ExperimentValidator._keys(f"{where}.params", check.get('params', {}), set(
                CheckRegistry.get(check['check_id']).defaults))
            budget = check.get('budget', {})
            ExperimentValidator._keys(f"{where}.budget", budget, BUDGET_KEYS)
            for key, value in budget.items():
                ExperimentValidator._positive_int(f"{where}.budget.{key}", value)
            tolerance = check.get('tolerance', {})
            ExperimentValidator._keys(f"{where}.tolerance", tolerance, TOLERANCE_KEYS)
            for key, value in tolerance.items():
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ExperimentFileError(f"{where}.tolerance.{key} must be a number")
        output = document.get('output', {})
        ExperimentValidator._keys('output', output, OUTPUT_KEYS)
        if output.get('format', 'json') not in FORMATS:
            raise ExperimentFileError(f"output.format must be one of {', '.join(FORMATS)}")
        return True


def parse_experiment(document: Mapping[str, Any], config: Config = None, seed: int = None, samples: int = None,
                     order: int = None, threads: int = 1) -> Experiment:
    """CheckSpecs from a validated document; explicit arguments override the file."""
    config = config or Config()
    ExperimentValidator.validate(document)
    seed = int(seed if seed is not None else document.get('seed', config.seed))
    specs = []
    for index, check in enumerate(document['checks']):
        budget = check.get('budget', {})
        try:
            specs.append(make_spec(check['check_id'], check.get('params'), seed=seed,
                                   samples=samples or budget.get('samples'), order=order or budget.get('order'),
                                   threads=threads, tolerance=check.get('tolerance'), config=config))
        except KPlaneError as exc:
            raise ExperimentFileError(f"checks[{index}] ({check['check_id']}): {exc}") from exc
    output = document.get('output', {})
    logger.info(f"experiment with {len(specs)} checks, seed {seed}")
    return Experiment(seed, specs, output.get('format', 'json'), output.get('path'))


def load_experiment(path: str, **kwargs) -> Experiment:
    try:
        with open(path, encoding='utf-8') as handle:
            document = json.load(handle)
    except OSError as exc:
        raise ExperimentFileError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ExperimentFileError(f"{path} is not valid JSON: {exc}") from exc
    return parse_experiment(document, **kwargs)
