import asyncio
import csv
import io
import json
import math
import os

import pytest

from conjectures import ConjectureReport, ConjectureTarget
from records import (CONJECTURE_COLUMNS, REPORT_COLUMNS, CheckRecord, ConjectureRecord, SCHEMA, check_record,
                     conjecture_record, dumps, render_csv, render_json)
from result_store import ResultStore, SchemaBuilder
from verification_harness import make_spec, run_check


@pytest.fixture(scope='module')
def results():
    return [run_check(make_spec('asymptotic_norms', {'p': p})) for p in (1.0, 2.0)]


def report(**changes) -> ConjectureReport:
    values = dict(target=ConjectureTarget.STAR_SECTIONS, family='ball', n=3, j=1, k=2, bound=3.875784585037477,
                  seed=1, best_ratio=3.875784585037477, best_stderr=0.0, best_params={'radius': 1.5},
                  search_ratio=3.875784585037477, violation_found=False, members_evaluated=3, members_skipped=0,
                  members_inconclusive=0, evaluations=4, m=2.0)
    values.update(changes)
    return ConjectureReport(**values)


def test_check_record(results):
    record = check_record(results[1])
    assert record.check_id == 'asymptotic_norms'
    assert record.verdict == 'PassEquality'
    assert json.loads(record.params)['p'] == 2.0
    assert record.id is None and record.run_id is None
    assert 'Check Id: asymptotic_norms' in str(record)


def test_render_json_is_deterministic(results):
    first = render_json([check_record(result) for result in results])
    again = render_json([check_record(result) for result in results])
    assert first == again
    rows = json.loads(first)
    assert [row['params']['p'] for row in rows] == [1.0, 2.0]
    assert set(rows[0]) == set(REPORT_COLUMNS)


def test_render_csv(results):
    text = render_csv([check_record(result) for result in results], REPORT_COLUMNS)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == REPORT_COLUMNS
    assert len(rows) == 3
    assert rows[1][REPORT_COLUMNS.index('wall_time')] == ''


def test_non_finite_values_become_null():
    record = conjecture_record(report(best_ratio=math.nan, best_stderr=math.inf, search_ratio=math.nan))
    row = json.loads(render_json([record]))[0]
    assert row['best_ratio'] is None and row['normalized_ratio'] is None
    assert row['best_params'] == {'radius': 1.5}
    assert set(row) == set(CONJECTURE_COLUMNS)


def test_dumps_sorts_keys():
    assert dumps({'b': 1, 'a': [1.0, math.inf]}) == '{"a": [1.0, null], "b": 1}'


def test_schema_sql():
    sql, fields = SchemaBuilder.generate_sql(SCHEMA, ['check_id'])
    assert "CREATE TABLE IF NOT EXISTS check_results" in sql
    assert "CREATE INDEX IF NOT EXISTS idx_check_results_check_id ON check_results (check_id);" in sql
    assert "FOREIGN KEY(run_id) REFERENCES runs(id) ON DELETE CASCADE" in sql
    assert fields['runs'] == ['id', 'command', 'seed', 'arguments', 'created_at']


def test_store_round_trip(tmp_path, results):
    async def scenario():
        store = await ResultStore(str(tmp_path / 'nested' / 'runs.db'))
        run_id = await store.save_run('check', 20240917, dumps({'ids': ['asymptotic_norms']}))
        assert await store.save_many([check_record(result) for result in results], run_id)
        assert await store.save_report(conjecture_record(report()), run_id)
        checks = await store.load_many('check_results', check_id='asymptotic_norms')
        runs = await store.load_many('runs')
        reports = await store.load_many('conjecture_reports', target='StarSections')
        missing = await store.load_many('check_results', check_id='busemann')
        return store, run_id, checks, runs, reports, missing

    store, run_id, checks, runs, reports, missing = asyncio.run(scenario())
    assert run_id == 1
    assert [type(row) for row in checks] == [CheckRecord, CheckRecord]
    assert [row.run_id for row in checks] == [1, 1]
    assert checks[0].params == check_record(results[0]).params
    assert runs[0].command == 'check' and runs[0].created_at
    assert isinstance(reports[0], ConjectureRecord) and reports[0].best_params == '{"radius": 1.5}'
    assert missing == []
    store.clean_up()
    assert not os.path.exists(store.db_path)


def test_store_rejects_unknown_tables_and_columns(tmp_path):
    async def scenario():
        store = await ResultStore(str(tmp_path / 'runs.db'))
        with pytest.raises(ValueError, match="Unknown table"):
            await store.load_many('nothing')
        with pytest.raises(ValueError, match="Unknown columns"):
            await store.load_many('check_results', colour='red')
        assert not await store.save_many([])

    asyncio.run(scenario())


if __name__ == '__main__':
    pytest.main([__file__])
