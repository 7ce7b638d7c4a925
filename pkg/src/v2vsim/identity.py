import re
from enum import Enum

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from v2vsim.crypto import CryptoProvider, KeyPair, Signature, default_provider
from v2vsim.crypto.encoding import (
    decode_fields,
    decode_float,
    decode_str,
    encode_fields,
    encode_float,
    encode_str,
)
from v2vsim.logger import get_logger
from v2vsim.puf import CrpRecord
from v2vsim.world.pose import Pose

VIN_PATTERN = re.compile(r"^[A-HJ-NPR-Z0-9]{17}$")

logger = get_logger(__name__)


class CertificateIssueError(Exception):
    pass


class Brand(str, Enum):
    TOYOTA = "toyota"
    VOLKSWAGEN = "volkswagen"
    FORD = "ford"
    HONDA = "honda"
    BMW = "bmw"
    MERCEDES = "mercedes"
    HYUNDAI = "hyundai"
    KIA = "kia"
    RENAULT = "renault"
    FIAT = "fiat"
    SKODA = "skoda"
    VOLVO = "volvo"


class Color(str, Enum):
    WHITE = "white"
    BLACK = "black"
    SILVER = "silver"
    GREY = "grey"
    RED = "red"
    BLUE = "blue"
    GREEN = "green"
    YELLOW = "yellow"


class StaticAttributes(BaseModel):
    model_config = ConfigDict(frozen=True)

    vin: str = Field(..., description="17-character VIN, no I, O or Q")
    license_plate: str = Field(..., min_length=1)
    brand: Brand
    color: Color

    @field_validator("vin")
    @classmethod
    def check_vin(cls, value: str) -> str:
        if not VIN_PATTERN.match(value):
            raise ValueError(f"malformed VIN {value!r}")
        return value

    def to_bytes(self) -> bytes:
        return encode_fields(
            [
                encode_str(self.vin),
                encode_str(self.license_plate),
                encode_str(self.brand.value),
                encode_str(self.color.value),
            ]
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "StaticAttributes":
        vin, plate, brand, color = (decode_str(f) for f in decode_fields(data, expected=4))
        return cls(vin=vin, license_plate=plate, brand=Brand(brand), color=Color(color))

    def appearance(self) -> tuple[str, Brand, Color]:
        return (self.license_plate, self.brand, self.color)


class ValidityWindow(BaseModel):
    model_config = ConfigDict(frozen=True)

    valid_from: float
    valid_to: float

    @model_validator(mode="after")
    def check_window(self):
        if not self.valid_to > self.valid_from:
            raise ValueError("validity window is empty")
        return self


class Certificate(BaseModel):
    """Monolithic CA binding of a public key, static attributes and CRPs.

    The signature covers the canonical bytes of every other field at once;
    there is no separately signed attribute blob.
    """

    model_config = ConfigDict(frozen=True)

    subject_attributes: StaticAttributes
    subject_public_key: bytes
    puf_crp_commitments: tuple[CrpRecord, ...] = ()
    valid_from: float
    valid_to: float
    ca_signature: Signature = b""

    def tbs_bytes(self) -> bytes:
        return encode_fields(
            [
                self.subject_attributes.to_bytes(),
                self.subject_public_key,
                encode_fields([crp.to_bytes() for crp in self.puf_crp_commitments]),
                encode_float(self.valid_from),
                encode_float(self.valid_to),
            ]
        )

    def to_bytes(self) -> bytes:
        return encode_fields([self.tbs_bytes(), self.ca_signature])

    @classmethod
    def from_bytes(cls, data: bytes) -> "Certificate":
        tbs, signature = decode_fields(data, expected=2)
        attrs, public_key, crps, valid_from, valid_to = decode_fields(tbs, expected=5)
        return cls(
            subject_attributes=StaticAttributes.from_bytes(attrs),
            subject_public_key=public_key,
            puf_crp_commitments=tuple(
                CrpRecord.from_bytes(item) for item in decode_fields(crps)
            ),
            valid_from=decode_float(valid_from),
            valid_to=decode_float(valid_to),
            ca_signature=signature,
        )

    def to_text(self) -> str:
        attrs = self.subject_attributes
        lines = [
            "Certificate:",
            f"  vin:      {attrs.vin}",
            f"  plate:    {attrs.license_plate}",
            f"  brand:    {attrs.brand.value}",
            f"  color:    {attrs.color.value}",
            f"  key:      {self.subject_public_key.hex()}",
            f"  crps:     {len(self.puf_crp_commitments)}",
            f"  validity: [{self.valid_from:.3f}, {self.valid_to:.3f}]",
            f"  ca_sig:   {self.ca_signature.hex()[:32]}...",
        ]
        return "\n".join(lines)


class RejectReason(str, Enum):
    BAD_SIGNATURE = "BAD_SIGNATURE"
    EXPIRED = "EXPIRED"
    NOT_YET_VALID = "NOT_YET_VALID"


class CertificateVerdict(BaseModel):
    accepted: bool
    reason: RejectReason | None = None

    def __bool__(self) -> bool:
        return self.accepted


def ca_issue(
    ca_secret: bytes,
    attrs: StaticAttributes,
    subject_pk: bytes,
    crp_commitments: list[CrpRecord] | tuple[CrpRecord, ...],
    validity: ValidityWindow,
    provider: CryptoProvider | None = None,
) -> Certificate:
    provider = provider or default_provider()
    # attributes built with model_construct skip validation; certify nothing unchecked
    try:
        attrs = StaticAttributes.model_validate(attrs.model_dump())
    except ValidationError as exc:
        reason = exc.errors()[0]["msg"]
        raise CertificateIssueError(f"refusing to certify: {reason}") from exc
    if not validity.valid_to > validity.valid_from:
        raise CertificateIssueError("validity window is empty")
    unsigned = Certificate(
        subject_attributes=attrs,
        subject_public_key=subject_pk,
        puf_crp_commitments=tuple(crp_commitments),
        valid_from=validity.valid_from,
        valid_to=validity.valid_to,
    )
    signature = provider.sign(ca_secret, unsigned.tbs_bytes())
    logger.debug("issued certificate for %s", attrs.vin)
    return unsigned.model_copy(update={"ca_signature": signature})


def verify_certificate(
    ca_public: bytes,
    cert: Certificate,
    now: float,
    provider: CryptoProvider | None = None,
) -> CertificateVerdict:
    provider = provider or default_provider()
    if not provider.verify(ca_public, cert.tbs_bytes(), cert.ca_signature):
        return CertificateVerdict(accepted=False, reason=RejectReason.BAD_SIGNATURE)
    if now < cert.valid_from:
        return CertificateVerdict(accepted=False, reason=RejectReason.NOT_YET_VALID)
    if now > cert.valid_to:
        return CertificateVerdict(accepted=False, reason=RejectReason.EXPIRED)
    return CertificateVerdict(accepted=True)


class CertificateAuthority(BaseModel):
    keys: KeyPair
    provider: CryptoProvider = Field(default_factory=default_provider)

    @property
    def public_key(self) -> bytes:
        return self.keys.public_part

    def issue(
        self,
        attrs: StaticAttributes,
        subject_pk: bytes,
        crp_commitments: list[CrpRecord] | tuple[CrpRecord, ...],
        validity: ValidityWindow,
    ) -> Certificate:
        return ca_issue(
            self.keys.secret_part,
            attrs,
            subject_pk,
            crp_commitments,
            validity,
            self.provider,
        )


class AttributeObservation(BaseModel):
    model_config = ConfigDict(frozen=True)

    observed_plate: str | None = None
    observed_brand: Brand | None = None
    observed_color: Color | None = None
    observer_pose: Pose
    observed_at: float

    def is_empty(self) -> bool:
        return (
            self.observed_plate is None
            and self.observed_brand is None
            and self.observed_color is None
        )


def match_attributes(obs: AttributeObservation, attrs: StaticAttributes) -> bool:
    if obs.is_empty():
        return False
    if obs.observed_plate is not None and obs.observed_plate != attrs.license_plate:
        return False
    if obs.observed_brand is not None and obs.observed_brand != attrs.brand:
        return False
    if obs.observed_color is not None and obs.observed_color != attrs.color:
        return False
    return True
