"""Figure rendering for coilpose experiment artifacts."""

from .render import render, RenderError

__all__ = ["render", "RenderError"]
