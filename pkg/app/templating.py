"""Jinja2 template configuration for the generated RTL, testbenches and scripts."""

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from app.config import settings


def sized(value: int, width: int) -> str:
    """Signed sized Verilog literal, e.g. ``-12'sd3``."""
    if value < 0:
        return f"-{width}'sd{-value}"
    return f"{width}'sd{value}"


def code(value: int, width: int = 8) -> str:
    """Unsigned literal of the two's-complement bit pattern of ``value``."""
    return f"{width}'d{value & ((1 << width) - 1)}"


def msb(width: int) -> int:
    return max(width - 1, 0)


def clog2(n: int) -> int:
    """Bits needed to count 0..n-1 (at least 1)."""
    return max((n - 1).bit_length(), 1)


templates = Environment(
    loader=FileSystemLoader(str(settings.TEMPLATES_DIR)),
    undefined=StrictUndefined,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
    autoescape=False,
)

templates.filters["sized"] = sized
templates.filters["code"] = code
templates.filters["msb"] = msb
templates.filters["clog2"] = clog2
