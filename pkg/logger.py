import logging
import sys
from config import Config


class GetLogger:
    __slots__ = ('logger', 'config')

    def __call__(self, config: Config = None, name: str = 'kplane'):
        """Setup and return a logger"""
        self.config = config
        self.logger = logging.getLogger(name)
        self.setup_logging()
        return self.logger

    def setup_logging(self):
        """Setup logging configs from a config or with default settings."""
        if self.config:
            target = (
                {'filename': self.config.log_file, 'filemode': 'a'}
                if self.config.log_file else {'stream': sys.stderr}
            )
            logging.basicConfig(
                level=getattr(logging, self.config.logging_level.upper(), logging.WARNING),
                format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
                force=True,
                **target
            )
        else:
            # Defaults; stdout is reserved for reports
            logging.basicConfig(
                stream=sys.stderr,
                format='%(asctime)s - %(levelname)s - %(message)s',
                level=logging.WARNING
            )
