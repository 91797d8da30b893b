"""Image-to-robot painting pipeline with a brushstroke generator.

Modules:
    stroke    quadratic Bezier strokes with tapered radius
    canvas    grayscale canvases, hard-edged stroke rendering, PGM I/O
    sbr       greedy stroke-based rendering of a target image
    quantize  k-means palette reduction of stroke sequences
    program   robot painting programs and their text format
    dataprep  stroke-sheet and motion-capture data preparation
    vae       convolutional VAE over 32x64 brushstroke images
    cli       ``robopaint`` command-line entry point
"""

from .canvas import Canvas, mse, read_pgm, render_sequence, render_stroke, write_pgm
from .errors import RobopaintError
from .quantize import Palette, QuantizerConfig, kmeans, quantize
from .sbr import SbrConfig, paint, paint_with_trace
from .stroke import Stroke, is_restricted, restrict_control, unrestrict_control

__version__ = "0.1.0"

__all__ = [
    "Canvas", "Palette", "QuantizerConfig", "RobopaintError", "SbrConfig", "Stroke",
    "is_restricted", "kmeans", "mse", "paint", "paint_with_trace", "quantize", "read_pgm",
    "render_sequence", "render_stroke", "restrict_control", "unrestrict_control", "write_pgm",
]
