"""Optional SQLite ledger of check and explorer runs.

    store = await ResultStore('runs/kplane.db')
    run_id = await store.save_run('check', seed, arguments)
    await store.save_many([check_record(result) for result in results], run_id)
    rows = await store.load_many('check_results', check_id='busemann')
"""
import os
from typing import Any, Dict, List, Optional, Sequence, Tuple

from db_connection import DatabaseConnection
from logger import GetLogger
from records import SCHEMA, CheckRecord, ConjectureRecord, RecordDataClass, RunRecord, columns

logger = GetLogger()(name=__name__)

INDEXES = ['check_id', 'target']
TABLE_OF = {RunRecord: 'runs', CheckRecord: 'check_results', ConjectureRecord: 'conjecture_reports'}


class SchemaBuilder:
    @staticmethod
    def generate_sql(schema: dict, idxs: List[str] = None) -> Tuple[str, Dict[str, List[str]]]:
        """CREATE statements for every table plus requested indexes, and each table's column names."""
        sql_statements = []
        table_fields = {}

        for table_name, table_columns in schema.items():
            column_defs, constraints, indexes, names = [], [], [], []
            for col_name, col_type in table_columns.items():
                if col_name.startswith(('PRIMARY KEY', 'UNIQUE', 'CHECK', 'FOREIGN KEY')):
                    constraints.append(f"{col_name} {col_type}")
                else:
                    column_defs.append(f"{col_name} {col_type}")
                    names.append(col_name)
                if idxs and col_name in idxs:
                    indexes.append(f"CREATE INDEX IF NOT EXISTS idx_{table_name}_{col_name} "
                                   f"ON {table_name} ({col_name});")

            columns_sql = ',\n    '.join(column_defs + constraints)
            sql_statements.append(f"CREATE TABLE IF NOT EXISTS {table_name} (\n    {columns_sql}\n);")
            sql_statements.extend(indexes)
            table_fields[table_name] = names

        return "\n\n".join(sql_statements), table_fields


class ResultStore:
    """Awaitable store; awaiting it creates the folder and the schema once."""

    def __init__(self, db_path: str, schema: dict = None):
        self.db_path = os.path.abspath(db_path)
        self.schema = schema or SCHEMA
        self.connection = None
        self.initialized = False

    def __await__(self):
        return self.entry_init().__await__()

    def create_db_folder(self) -> None:
        folder = os.path.dirname(self.db_path)
        if not os.path.exists(folder):
            os.makedirs(folder)
            logger.info(f"New database folder {folder} created.")

    async def entry_init(self) -> 'ResultStore':
        if not self.initialized:
            self.create_db_folder()
            sql_schema, _ = SchemaBuilder.generate_sql(self.schema, INDEXES)
            self.connection = DatabaseConnection(self.db_path, self.schema)
            async with self.connection as conn:
                await conn.executescript(sql_schema)
                await conn.commit()
            logger.info(f"Result store ready at {self.db_path}")
            self.initialized = True
        return self

    @staticmethod
    def insertion_query(table: str, data: Dict[str, Any]) -> Tuple[str, Dict[str, Any]]:
        """INSERT for the non-null columns; ids and timestamps come from SQLite."""
        values = {key: value for key, value in data.items() if value is not None or key not in ('id', 'created_at')}
        keys = list(values)
        return (f"INSERT INTO {table} ({', '.join(keys)}) VALUES ({', '.join(f':{key}' for key in keys)})",
                values)

    async def save_run(self, command: str, seed: int = None, arguments: str = None) -> Optional[int]:
        """Insert a run row and return its id (None on failure)."""
        query, values = self.insertion_query('runs', RunRecord(command=command, seed=seed,
                                                               arguments=arguments).dc_dict())
        try:
            async with self.connection as conn:
                cursor = await conn.execute(query, values)
                await conn.commit()
                logger.info(f"Saved run {cursor.lastrowid} ({command})")
                return cursor.lastrowid
        except Exception as e:
            logger.error(f"Error in save_run: {e}")
            return None

    async def save_many(self, records: Sequence[Any], run_id: int = None) -> bool:
        """Insert report rows in one transaction, tagging them with ``run_id``."""
        if not records:
            return False
        try:
            async with self.connection as conn:
                await conn.execute("BEGIN TRANSACTION;")
                try:
                    for record in records:
                        record.run_id = run_id
                        query, values = self.insertion_query(TABLE_OF[type(record)], record.dc_dict())
                        cursor = await conn.execute(query, values)
                        record.id = cursor.lastrowid
                    await conn.commit()
                except Exception:
                    await conn.rollback()
                    raise
            logger.info(f"Saved {len(records)} records for run {run_id}")
            return True
        except Exception as e:
            logger.error(f"Error in save_many: {e}")
            return False

    async def save_report(self, record: Any, run_id: int = None) -> bool:
        return await self.save_many([record], run_id)

    async def load_many(self, table: str = 'check_results', **filters) -> List[Any]:
        """Rows of ``table`` matching every filter, oldest first."""
        if table not in self.schema:
            raise ValueError(f"Unknown table: {table}")
        unknown = sorted(set(filters) - set(columns(table)))
        if unknown:
            raise ValueError(f"Unknown columns for {table}: {', '.join(unknown)}")
        record_type = RecordDataClass()(table)
        conditions = " AND ".join(f"{key} = :{key}" for key in filters) or "1=1"
        query = f"SELECT {', '.join(columns(table))} FROM {table} WHERE {conditions} ORDER BY id"
        try:
            async with self.connection as conn:
                cursor = await conn.execute(query, filters)
                results = await cursor.fetchall()
        except Exception as e:
            logger.error(f"Error in load_many: {e}")
            return []
        logger.info(f"Records found: {len(results)} in {table}")
        return [record_type(*row) for row in results]

    def clean_up(self) -> None:
        """Remove the database file."""
        DatabaseConnection.forget(self.db_path)
        if os.path.exists(self.db_path):
            os.remove(self.db_path)
            logger.info(f"Database file {self.db_path} removed.")
        self.initialized = False
