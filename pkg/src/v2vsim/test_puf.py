import pickle

import numpy as np
import pytest

from v2vsim.puf import (
    Challenge,
    CrpVerifier,
    PufDevice,
    PufError,
    enroll_crps,
    fractional_hamming_distance,
    puf_respond,
    verify_response,
)


def test_enrolled_responses_verify_once(rng) -> None:
    device = PufDevice.manufacture("v2", rng)
    crps = enroll_crps(device, 4, rng)
    assert len({crp.challenge.challenge_id for crp in crps}) == 4
    verifier = CrpVerifier()
    crp = crps[0]
    response = puf_respond(device, crp.challenge)
    assert verify_response(verifier, crp, response)
    assert verifier.is_consumed(crp)
    assert not verify_response(verifier, crp, response)
    assert verifier.last_rejection == "REUSED"


def test_other_device_fails(rng) -> None:
    genuine = PufDevice.manufacture("v2", rng)
    clone = PufDevice.manufacture("x", rng)
    crp = enroll_crps(genuine, 1, rng)[0]
    verifier = CrpVerifier()
    assert not verifier.verify_response(crp, puf_respond(clone, crp.challenge))
    assert verifier.last_rejection == "WRONG_RESPONSE"
    # a failed attempt still burns the CRP
    assert not verifier.verify_response(crp, puf_respond(genuine, crp.challenge))


def test_devices_are_uncorrelated(rng) -> None:
    a = PufDevice.manufacture("a", rng)
    b = PufDevice.manufacture("b", rng)
    challenge = Challenge(challenge_id=1, challenge_bits=rng.bytes(32))
    distance = fractional_hamming_distance(puf_respond(a, challenge), puf_respond(b, challenge))
    assert 0.25 < distance < 0.75
    assert fractional_hamming_distance(puf_respond(a, challenge), puf_respond(a, challenge)) == 0.0


def test_device_secret_cannot_leave(rng) -> None:
    device = PufDevice.manufacture("v1", rng)
    with pytest.raises(PufError):
        pickle.dumps(device)
    assert "secret" not in repr(device)
    with pytest.raises(AttributeError):
        device.extra = 1


def test_enrollment_needs_a_count(rng) -> None:
    with pytest.raises(PufError):
        enroll_crps(PufDevice.manufacture("v1", rng), 0, rng)


def test_challenge_size() -> None:
    with pytest.raises(ValueError):
        Challenge(challenge_id=1, challenge_bits=b"\x00" * 8)


def test_distance_between_devices_averages_one_half(rng) -> None:
    distances = []
    for pair in range(1000):
        a = PufDevice.manufacture(f"a{pair}", rng)
        b = PufDevice.manufacture(f"b{pair}", rng)
        challenge = Challenge(challenge_id=pair, challenge_bits=rng.bytes(32))
        distances.append(
            fractional_hamming_distance(puf_respond(a, challenge), puf_respond(b, challenge))
        )
    assert abs(np.mean(distances) - 0.5) <= 0.05


def test_distance_between_challenges_averages_one_half(rng) -> None:
    device = PufDevice.manufacture("v2", rng)
    distances = []
    for pair in range(1000):
        first = Challenge(challenge_id=2 * pair, challenge_bits=rng.bytes(32))
        second = Challenge(challenge_id=2 * pair + 1, challenge_bits=rng.bytes(32))
        distances.append(
            fractional_hamming_distance(puf_respond(device, first), puf_respond(device, second))
        )
    assert abs(np.mean(distances) - 0.5) <= 0.05
