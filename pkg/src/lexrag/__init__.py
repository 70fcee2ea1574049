"""lexrag: retrieval-augmented question answering for legal documents."""

__version__ = "0.1.0"
