"""Numerical configuration for the Kato toolkit.

Pydantic models for tolerances, sup-search limits and Monte Carlo settings,
with environment variable support. Process, domain and measure descriptions
live next to the code that evaluates them (kernels, geometry); the run-level
document that ties everything together is `cli.RunConfig`.
"""

import os
from typing import Dict, Optional

from pydantic import BaseModel, Field


class ToleranceConfig(BaseModel):
    """Quadrature tolerances and verdict thresholds."""
    rel_tol: float = Field(1e-6, gt=0, description="Relative quadrature tolerance")
    abs_tol: float = Field(1e-12, ge=0, description="Absolute quadrature tolerance")
    max_subdivisions: int = Field(50, ge=1, description="Adaptive subdivision limit per integral")
    gauss_order: int = Field(24, ge=4, description="Base Gauss rule order on a segment")
    angular_nodes: Dict[int, int] = Field(
        default_factory=lambda: {1: 2, 2: 64, 3: 16},
        description="Angular resolution per dimension (d=3: polar nodes, azimuth uses twice as many)",
    )
    ray_samples: int = Field(256, ge=16, description="Samples per ray when locating domain boundaries")
    truncation_radius: float = Field(1e3, gt=0, description="Radius beyond which unbounded rays are extrapolated")
    verdict_abs_factor: float = Field(1e-3, gt=0, description="IN requires final value < factor * first value")
    plateau_rel: float = Field(0.10, gt=0, description="OUT when the last three values agree within this fraction")

    def nodes_for(self, d: int) -> int:
        return self.angular_nodes.get(d, self.angular_nodes.get(3, 16))


class SearchConfig(BaseModel):
    """Limits for sup-searches over points and directions."""
    starts_per_dim: int = Field(64, ge=1, description="Direction starts per dimension for B0 profiles")
    potential_starts: int = Field(24, ge=1, description="Initial candidates for potential sup-searches")
    refine_top: int = Field(4, ge=1, description="Number of best candidates refined by local search")
    max_iter: int = Field(200, ge=1, description="Local search iteration cap")
    search_radius: float = Field(4.0, gt=0, description="Half-width of the search box for unbounded supports")
    frostman: bool = Field(True, description="Restrict sup-searches to the support of the restricted measure")
    seed: int = Field(7, description="Seed of the candidate sampler used by sup-searches")


class MonteCarloConfig(BaseModel):
    """Path simulation defaults."""
    paths: int = Field(100_000, ge=1, description="Number of sample paths")
    dt: float = Field(1e-3, gt=0, description="Time step")
    batch_size: int = Field(10_000, ge=1, description="Paths per independently seeded batch")
    z: float = Field(1.96, gt=0, description="Normal quantile used for reported intervals")
    horizon: float = Field(50.0, gt=0, description="Time cap for exit-time simulations")


class Config(BaseModel):
    """Toolkit-wide settings. One clear way to configure numerics and runs."""
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    search: SearchConfig = Field(default_factory=SearchConfig)
    monte_carlo: MonteCarloConfig = Field(default_factory=MonteCarloConfig)
    seed: int = Field(20240101, description="Root seed for all random streams")
    threads: int = Field(1, ge=1, description="Worker cap for parallel grid and batch evaluation")
    out_dir: str = Field("reports", description="Directory for report files")
    log_level: str = Field("INFO", description="Logging level")
    log_file: Optional[str] = Field(None, description="Optional log file")

    @classmethod
    def from_env(cls) -> "Config":
        """Create configuration from KATO_* environment variables."""
        return cls(
            tolerances=ToleranceConfig(
                rel_tol=float(os.getenv("KATO_REL_TOL", "1e-6")),
                abs_tol=float(os.getenv("KATO_ABS_TOL", "1e-12")),
            ),
            monte_carlo=MonteCarloConfig(
                paths=int(os.getenv("KATO_PATHS", "100000")),
                dt=float(os.getenv("KATO_DT", "1e-3")),
            ),
            seed=int(os.getenv("KATO_SEED", "20240101")),
            threads=int(os.getenv("KATO_THREADS", "1")),
            out_dir=os.getenv("KATO_OUT_DIR", "reports"),
            log_level=os.getenv("KATO_LOG_LEVEL", "INFO").strip(),
            log_file=os.getenv("KATO_LOG_FILE") or None,
        )


def get_config() -> Config:
    """Get configuration from environment variables. This is the main entry point."""
    return Config.from_env()
