import aiosqlite
from logger import GetLogger

logger = GetLogger()(name=__name__)


class DatabaseConnection:
    """Async context manager over one aiosqlite connection per database path."""
    _instances = {}

    def __new__(cls, db_path: str, schema: dict):
        instance = cls._instances.get(db_path)
        if instance is None:
            instance = super(DatabaseConnection, cls).__new__(cls)
            instance.db_path = db_path
            instance.conn = None
            instance.schema = schema
            instance.has_foreign_keys = cls._detect_foreign_keys(schema)
            cls._instances[db_path] = instance
        return instance

    @staticmethod
    def _detect_foreign_keys(schema: dict) -> bool:
        return any(column.startswith('FOREIGN KEY') for columns in schema.values() for column in columns)

    @classmethod
    def forget(cls, db_path: str):
        cls._instances.pop(db_path, None)

    async def __aenter__(self):
        if self.conn is None:
            self.conn = await aiosqlite.connect(self.db_path)
            if self.has_foreign_keys:
                await self.conn.execute("PRAGMA foreign_keys = ON;")
                logger.debug("Foreign keys enforcement enabled")
        logger.debug(f"Database connection to {self.db_path} established")
        return self.conn

    async def __aexit__(self, exc_type, exc_val, exc_tb):
        if self.conn:
            await self.conn.close()
            logger.debug("Database connection closed.")
            self.conn = None
