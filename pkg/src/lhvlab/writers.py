"""
Functions and classes for writing the JSON, CSV and Excel artifacts
"""

import json
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

_logger = logging.getLogger(__name__)

MAX_COLUMN_WIDTH = 40


class WorkBook:
    """
    A class to hold the Excel styles

    Args:
        workbook: the xlsxwriter workbook to work on

    Attributes:
        workbook: workbook
        header_format: bold, bottom-bordered header cells
        number_format: scientific format for the error columns
    """

    def __init__(self, workbook):
        self.workbook = workbook
        self.header_format = None
        self.number_format = None
        self.add_styles()

    def add_styles(self):
        """Add the styles to the workbook"""
        self.header_format = self.workbook.add_format(
            {"bold": True, "bottom": 1, "align": "left", "valign": "top"}
        )
        self.number_format = self.workbook.add_format({"num_format": "0.000E+00"})


def update_width(label: str, max_width: int) -> int:
    """Widen a column to fit label, up to MAX_COLUMN_WIDTH characters"""
    return min(max(max_width, len(str(label)) + 2), MAX_COLUMN_WIDTH)


def _to_builtin(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return value.as_posix()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def render_json(data) -> str:
    """Deterministic JSON text with a trailing newline"""
    return json.dumps(data, indent=2, default=_to_builtin) + "\n"


def render_csv(table: pd.DataFrame) -> str:
    """CSV text with a header row, '.' decimals and LF line endings"""
    return table.to_csv(index=False, lineterminator="\n", decimal=".")


def write_text(text: str, output_path: Optional[Path] = None):
    """Write text to a file, or to stdout when no path is given"""
    if output_path is None:
        sys.stdout.write(text)
        return
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    _logger.info(f"Writing {output_path}")
    with open(output_path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(text)


def write_json(data, output_path: Optional[Path] = None):
    write_text(render_json(data), output_path)


def write_csv(table: pd.DataFrame, output_path: Optional[Path] = None):
    write_text(render_csv(table), output_path)


def write_tables_to_excel(tables: dict, output_path: Path):
    """
    Write every table to its own sheet

    Args:
        tables (dict): sheet name -> DataFrame
        output_path (Path): the xlsx file
    """
    output_path = Path(output_path).with_suffix(".xlsx")
    output_path.parent.mkdir(parents=True, exist_ok=True)
    _logger.info(f"Exporting {len(tables)} tables to {output_path}")
    with pd.ExcelWriter(output_path, engine="xlsxwriter") as writer:
        work_book = WorkBook(writer.book)
        for sheet_name, table in tables.items():
            _logger.debug(f"Adding sheet {sheet_name}")
            table.to_excel(writer, sheet_name=sheet_name, index=False, startrow=1, header=False)
            worksheet = writer.sheets[sheet_name]
            for col_index, column in enumerate(table.columns):
                worksheet.write_string(0, col_index, str(column), work_book.header_format)
                width = update_width(column, max_width=10)
                for value in table[column].head(100):
                    width = update_width(value, max_width=width)
                cell_format = work_book.number_format if "error" in str(column) else None
                worksheet.set_column(col_index, col_index, width, cell_format)
            worksheet.freeze_panes(1, 0)
