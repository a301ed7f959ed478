"""HTTP service layer: FastAPI app factory and pydantic schemas."""

from .app import create_app

__all__ = ["create_app"]
