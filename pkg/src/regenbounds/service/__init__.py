"""HTTP service package: FastAPI app and its request/response models."""

from .app import app

__all__ = ["app"]
