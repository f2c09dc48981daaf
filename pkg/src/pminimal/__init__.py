"""p-area minimizers over planar domains: solver, geometry and certification."""

__version__ = "0.1.0"
