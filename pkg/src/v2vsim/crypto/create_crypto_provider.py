from typing import TypeAlias

from .standard.provider import StandardProvider, StandardProviderConfig

# Further providers join as a union discriminated on PROVIDER_NAME.
ProviderConfig: TypeAlias = StandardProviderConfig
ProviderClient: TypeAlias = StandardProvider


def create_crypto_provider(config: ProviderConfig) -> ProviderClient:
    if config.PROVIDER_NAME == "standard":
        return StandardProvider(config=config)
    raise NotImplementedError(f"Provider {config.PROVIDER_NAME} not implemented")


_default: StandardProvider | None = None


def default_provider() -> StandardProvider:
    global _default
    if _default is None:
        _default = create_crypto_provider(StandardProviderConfig())
    return _default
