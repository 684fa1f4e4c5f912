"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: config errors exit 2, data errors
exit 3, provider errors exit 4.
"""


class KgauditError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(KgauditError):
    """Invalid or incomplete configuration."""


class DataError(KgauditError):
    """Malformed or inconsistent input data (KG files, corpus, run artifacts)."""


class UnknownEntityError(DataError):
    """An entity id was queried that is not part of the loaded graph."""


class StoreError(DataError):
    """Run-store failure: unknown run, digest mismatch, lock conflict."""


class ProviderError(KgauditError):
    """Failure of an external embedding/adjudication provider."""


class RetriableProviderError(ProviderError):
    """Transport-level provider failure; the request may be retried."""


class ProviderProtocolError(ProviderError):
    """The provider answered, but the payload violates the capability schema.

    The raw payload is preserved for debugging.
    """

    def __init__(self, message: str, raw_payload: object = None):
        super().__init__(message)
        self.raw_payload = raw_payload
