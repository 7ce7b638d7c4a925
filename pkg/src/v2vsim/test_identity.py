import pytest
from pydantic import ValidationError

from v2vsim.identity import (
    AttributeObservation,
    Brand,
    Certificate,
    CertificateIssueError,
    Color,
    RejectReason,
    StaticAttributes,
    ValidityWindow,
    ca_issue,
    match_attributes,
    verify_certificate,
)
from v2vsim.puf import PufDevice, enroll_crps
from v2vsim.world.pose import Pose

WINDOW = ValidityWindow(valid_from=0.0, valid_to=100.0)


def _observation(**seen) -> AttributeObservation:
    return AttributeObservation(observer_pose=Pose(x=0, y=0), observed_at=0.0, **seen)


def test_issued_certificate_verifies(ca, attributes, provider, rng) -> None:
    keys = provider.gen_keypair(provider.random_seed(rng))
    device = PufDevice.manufacture("v1", rng)
    crps = enroll_crps(device, 3, rng)
    cert = ca.issue(attributes, keys.public_part, crps, WINDOW)
    assert verify_certificate(ca.public_key, cert, 50.0)
    assert Certificate.from_bytes(cert.to_bytes()) == cert
    assert "V1-1001" in cert.to_text()


@pytest.mark.parametrize(
    "now, reason",
    [(-1.0, RejectReason.NOT_YET_VALID), (100.5, RejectReason.EXPIRED)],
)
def test_validity_window(ca, attributes, now, reason) -> None:
    cert = ca.issue(attributes, b"\x01" * 32, [], WINDOW)
    verdict = verify_certificate(ca.public_key, cert, now)
    assert not verdict
    assert verdict.reason is reason


def test_any_edit_breaks_the_signature(ca, attributes) -> None:
    cert = ca.issue(attributes, b"\x01" * 32, [], WINDOW)
    cloned = attributes.model_copy(update={"color": Color.BLACK})
    edited = cert.model_copy(update={"subject_attributes": cloned})
    verdict = verify_certificate(ca.public_key, edited, 1.0)
    assert verdict.reason is RejectReason.BAD_SIGNATURE
    rekeyed = cert.model_copy(update={"subject_public_key": b"\x02" * 32})
    assert verify_certificate(ca.public_key, rekeyed, 1.0).reason is RejectReason.BAD_SIGNATURE


def test_rogue_authority_is_rejected(ca, attributes, provider) -> None:
    rogue = provider.gen_keypair(b"\x55" * 32)
    forged = ca_issue(rogue.secret_part, attributes, b"\x01" * 32, [], WINDOW, provider)
    assert verify_certificate(ca.public_key, forged, 1.0).reason is RejectReason.BAD_SIGNATURE


def test_malformed_vin_is_never_certified(ca) -> None:
    with pytest.raises(ValidationError):
        StaticAttributes(vin="IOQ", license_plate="X", brand=Brand.KIA, color=Color.RED)
    unchecked = StaticAttributes.model_construct(
        vin="1HGCM82633A00435O", license_plate="X", brand=Brand.KIA, color=Color.RED
    )
    with pytest.raises(CertificateIssueError):
        ca.issue(unchecked, b"\x01" * 32, [], WINDOW)


def test_empty_validity_window() -> None:
    with pytest.raises(ValidationError):
        ValidityWindow(valid_from=5.0, valid_to=5.0)


def test_attribute_matching(attributes) -> None:
    assert match_attributes(
        _observation(
            observed_plate="V1-1001", observed_brand=Brand.HONDA, observed_color=Color.WHITE
        ),
        attributes,
    )
    assert match_attributes(_observation(observed_plate="V1-1001"), attributes)
    assert not match_attributes(_observation(observed_plate="V1-1007"), attributes)
    assert not match_attributes(_observation(observed_color=Color.RED), attributes)
    assert not match_attributes(_observation(), attributes)
