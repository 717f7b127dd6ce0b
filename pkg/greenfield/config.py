import os
import logging
from dataclasses import dataclass


@dataclass(frozen=True)
class Config:
    app_name: str = "greenfield"
    threads: int = 1
    log_level: str = "WARNING"
    report_schema: str = "greenfield-report/1"
    # hard caps shared by the exact algebra
    max_expansion_terms: int = 10**7
    candidate_factor: int = 50

    @classmethod
    def from_env(cls) -> "Config":
        threads_raw = os.getenv("GREENFIELD_THREADS", "1")
        try:
            threads = max(1, int(threads_raw))
        except ValueError:
            logging.warning(f"Ignoring GREENFIELD_THREADS={threads_raw!r}, using 1.")
            threads = 1
        return cls(
            threads=threads,
            log_level=os.getenv("GREENFIELD_LOG_LEVEL", "WARNING").upper(),
        )


config = Config.from_env()
