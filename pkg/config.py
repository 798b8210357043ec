import os


class Config:
    """Run-level knobs shared by the library and the CLI."""

    def __init__(self, **overrides):
        self.logging_level = os.environ.get('KPLANE_LOG_LEVEL', 'WARNING')
        self.log_file = os.environ.get('KPLANE_LOG_FILE') or None
        self.seed = 20240917
        self.samples = 100_000
        self.order = 48
        self.sphere_order = 48
        self.threads = 1
        self.block_size = 4096
        self.stat_sigma = 3.0
        self.rel_tol = 0.02
        self.inconclusive_fraction = 0.25
        self.roundoff_floor = 1e-9
        self.syserr_planes = 32

        for key, value in overrides.items():
            if not hasattr(self, key):
                raise ValueError(f"Unknown config option: {key}")
            setattr(self, key, value)
