from .app import create_app
from .state import ModelBundle, ServiceError, Workspace

__all__ = ["create_app", "ModelBundle", "ServiceError", "Workspace"]
