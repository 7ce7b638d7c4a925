from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SimConstants(BaseModel):
    """Physical, protocol and search constants of one simulation.

    Sensor noise defaults keep honest runs at least 5 sigma inside every
    tolerance at the shipped geometries (300 m radio range at most).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    c_sim: float = Field(default=3.0e8, gt=0, description="Signal speed in m/s")
    radio_range: float = Field(default=300.0, gt=0, description="Radio range in m")
    radio_latency: float = Field(
        default=1e-3, ge=0, le=1.0, description="Fixed radio latency in s"
    )
    camera_max_range: float = Field(
        default=80.0, gt=0, description="Camera reading range in m"
    )
    p_confuse: float = Field(
        default=0.0, ge=0, le=1, description="Per-field camera confusion probability"
    )
    capture_radius: float = Field(
        default=2.0, gt=0, description="LIDAR capture radius around a target region"
    )
    sigma_range: float = Field(default=0.1, ge=0, description="LIDAR range noise in m")
    sigma_bearing: float = Field(
        default=0.005, ge=0, description="LIDAR bearing noise in rad"
    )
    theta_tol: float = Field(
        default=0.01, gt=0, lt=3.14, description="Autocollimator tolerance in rad"
    )
    beam_radius: float = Field(default=1.0, gt=0, description="Laser beam radius in m")
    puf_response_latency: float = Field(
        default=100e-6, ge=0, description="PUF evaluation latency in s"
    )
    puf_slack: float = Field(default=50e-6, ge=0, description="Slack added to tau_puf")
    beacon_window: float = Field(
        default=50e-3, gt=0, description="Deadline for a BeaconEcho in s"
    )
    handshake_timeout: float = Field(
        default=2.0, gt=0, description="Deadline for a whole handshake in s"
    )
    coupling_tolerance: float = Field(
        default=2.0,
        gt=0,
        description="Max distance between a claimed pose and the intended target",
    )
    relay_processing_delay: float = Field(
        default=10e-6, ge=0, description="Per-hop processing delay of a relay in s"
    )
    adversary_delay: float = Field(
        default=0.1, gt=0, description="Delay applied by DELAY and REPLAY in s"
    )
    knowledge_depth: int = Field(
        default=6, ge=1, le=12, description="Constructor depth cap of the oracle"
    )
    search_node_budget: int = Field(
        default=1_000_000, ge=1, description="Node budget of the bounded search"
    )
    cert_valid_from: float = Field(default=0.0, description="Certificate window start")
    cert_valid_to: float = Field(default=86400.0, description="Certificate window end")

    @model_validator(mode="after")
    def check_window(self):
        if self.cert_valid_to <= self.cert_valid_from:
            raise ValueError("cert_valid_to must be after cert_valid_from")
        return self

    def with_overrides(self, overrides: dict[str, Any]) -> "SimConstants":
        return SimConstants(**{**self.model_dump(), **overrides})


DEFAULT_CONSTANTS = SimConstants()
