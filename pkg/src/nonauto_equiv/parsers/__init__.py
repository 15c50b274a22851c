"""Parsers for expression text and run configuration files."""

from .config import RunConfig, load_config, parse_config
from .expression import parse_expr

__all__ = ["parse_expr", "RunConfig", "parse_config", "load_config"]
