"""Minimal surfaces with embedded planar ends from their spinor data."""

from .catalog import CATALOG, SurfaceSpec
from .mesh import Mesh, VerificationReport, build_mesh, export_obj, verify

__all__ = ["CATALOG", "Mesh", "SurfaceSpec", "VerificationReport", "build_mesh", "export_obj", "verify"]
__version__ = "0.1.0"
