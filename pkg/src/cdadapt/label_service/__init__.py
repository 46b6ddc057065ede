from .server import LabelServiceHandler, make_server, serve_forever
from .store import SCHEMA_VERSION, AnnotationTask, LabelStore

__all__ = [
    "AnnotationTask",
    "LabelStore",
    "SCHEMA_VERSION",
    "LabelServiceHandler",
    "make_server",
    "serve_forever",
]
