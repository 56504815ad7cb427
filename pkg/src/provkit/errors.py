"""Exception types shared across the package."""


class ProvkitError(Exception):
    """Base class for all provkit errors."""


class ImageDecodeError(ProvkitError):
    """Raised when image bytes cannot be decoded into pixels."""


class BundleError(ProvkitError):
    """Raised when an ingestion bundle is malformed or inconsistent."""


class DuplicateDocumentError(BundleError):
    """Raised when a bundle re-uses an already registered doc_id."""


class UnknownImageError(ProvkitError):
    """Raised when an image_id does not resolve in the corpus."""


class ManifestError(ProvkitError):
    """Raised when a manifest file cannot be loaded."""


class ChecksumError(ManifestError):
    """Raised when a manifest's stored checksum does not match its content."""


class UnsupportedVersionError(ManifestError):
    """Raised when a persisted file declares a version newer than supported."""


class ProviderTransportError(ProvkitError):
    """Transient failure talking to an embedding provider; safe to retry."""


class ProviderContractError(ProvkitError):
    """The provider returned data violating its declared contract (fatal)."""


class EmbedderMismatchError(ProvkitError):
    """Vectors from different embedders (or dims) were combined."""


class IndexFormatError(ProvkitError):
    """Raised when a persisted index or embedding cache file is invalid."""


class VlmTransportError(ProvkitError):
    """Transient failure talking to the vision-chat endpoint; retryable."""


class VlmResponseError(ProvkitError):
    """The model reply failed schema validation even after a corrective retry."""


class CitationError(ProvkitError):
    """A synthesized citation was not backed by the candidate evidence."""


class PipelineError(ProvkitError):
    """Analysis failure with the pipeline stage attached for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.message = message


class UnknownJobError(ProvkitError):
    """Raised when a job_id does not resolve in the job store."""


class ReportNotReadyError(ProvkitError):
    """Raised when a report is requested for a job that has not finished."""

    def __init__(self, job_id: str, state: str, diagnostic: str | None = None):
        detail = f"job {job_id} is in state {state}"
        if diagnostic:
            detail += f" ({diagnostic})"
        super().__init__(detail)
        self.job_id = job_id
        self.state = state
        self.diagnostic = diagnostic


class UnknownObjectError(ProvkitError):
    """A score referenced an object that does not exist."""


class NoScoresError(ProvkitError):
    """Raised when a distribution is requested for a question with no scores."""
