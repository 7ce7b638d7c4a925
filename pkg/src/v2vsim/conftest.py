from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from v2vsim.crypto import StandardProvider, default_provider
from v2vsim.identity import Brand, CertificateAuthority, Color, StaticAttributes
from v2vsim.sim.scenario import Scenario, load_scenario

TWO_CARS = """\
name = two-cars
seed = 5
variant = {variant}
duration = 3.0

[vehicles]
v1.pose = 0,0,0,0
v1.vin = 1HGCM82633A004352
v1.plate = V1-1001
v1.brand = honda
v1.color = white
v1.puf_crps = 4

v2.pose = 20,3.5,0,0
v2.vin = WVWZZZ1JZXW000001
v2.plate = V2-2002
v2.brand = volkswagen
v2.color = blue
v2.puf_crps = 4

[adversary]
radio = {radio}

[script]
at t=0.0 v1 initiate handshake with v2
at t=1.0 v1 session_send 'hello there'
"""


@pytest.fixture
def provider() -> StandardProvider:
    return default_provider()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def ca(provider: StandardProvider, rng: np.random.Generator) -> CertificateAuthority:
    return CertificateAuthority(
        keys=provider.gen_keypair(provider.random_seed(rng)), provider=provider
    )


@pytest.fixture
def attributes() -> StaticAttributes:
    return StaticAttributes(
        vin="1HGCM82633A004352",
        license_plate="V1-1001",
        brand=Brand.HONDA,
        color=Color.WHITE,
    )


@pytest.fixture
def two_cars():
    """Honest two-vehicle scenario; radio control and variant are parameters."""

    def build(variant: str = "V1", radio: str = "passive") -> Scenario:
        return load_scenario(TWO_CARS.format(variant=variant, radio=radio))

    return build


@pytest.fixture
def scenario_path():
    def locate(name: str) -> str:
        resource = resources.files("v2vsim") / "scenarios" / f"{name}.scn"
        return str(Path(str(resource)))

    return locate
