"""Renderers for expression trees and run reports."""

from .expression import format_number, render_expr
from .report import Report, Table, read_report, write_report

__all__ = ["render_expr", "format_number", "Report", "Table", "write_report", "read_report"]
