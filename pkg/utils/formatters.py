"""Formatting utilities for reports and CLI output"""
import os
from typing import Dict, List, Sequence

import pandas as pd

from .errors import CorpusIoError

FLOAT_FORMAT = '%.6f'


class ReportFormatter:
    """Formats metric reports for the terminal and for CSV files"""

    @staticmethod
    def write_csv(frame: pd.DataFrame, path: str) -> str:
        """
        Write a DataFrame as CSV with fixed float precision and LF endings

        Args:
            frame: Table to write
            path: Destination file

        Returns:
            The path written
        """
        directory = os.path.dirname(path)
        try:
            if directory:
                os.makedirs(directory, exist_ok=True)
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        except OSError as e:
            raise CorpusIoError(f"Cannot write {path}: {e}") from e
        return path

    @staticmethod
    def format_table(frame: pd.DataFrame, digits: int = 3) -> str:
        """
        Render a DataFrame as an aligned plain-text table

        Args:
            frame: Table to render
            digits: Decimals for float columns

        Returns:
            Table string
        """
        if frame.empty:
            return '(no rows)'
        cells: List[List[str]] = [[str(c) for c in frame.columns]]
        for row in frame.itertuples(index=False):
            cells.append([
                f"{v:.{digits}f}" if isinstance(v, float) else str(v)
                for v in row
            ])
        widths = [max(len(r[i]) for r in cells) for i in range(len(cells[0]))]
        lines = ['  '.join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
        lines.insert(1, '  '.join('-' * w for w in widths))
        return '\n'.join(lines)

    @staticmethod
    def plot_data(frame: pd.DataFrame) -> Dict[str, pd.DataFrame]:
        """
        Metric pairs for external scatter plots, one row per grid cell

        Args:
            frame: Report table with REPORT_COLUMNS

        Returns:
            {'f1_mcc': ..., 'auroc_aupr': ...} each with columns
            model, pipeline, augmented, seed, x, y
        """
        keys = ['model', 'pipeline', 'augmented', 'seed']
        pairs = {'f1_mcc': ('f1', 'mcc'), 'auroc_aupr': ('auroc', 'aupr')}
        out = {}
        for name, (x, y) in pairs.items():
            table = frame[keys + [x, y]].rename(columns={x: 'x', y: 'y'})
            out[name] = table.reset_index(drop=True)
        return out

    @staticmethod
    def format_counts(counts: Dict[str, int]) -> str:
        return '\n'.join(f"  {k:<20} {v}" for k, v in counts.items())

    @staticmethod
    def format_list(items: Sequence[str], limit: int = 10) -> str:
        shown = ', '.join(items[:limit])
        more = len(items) - limit
        return shown + (f" (+{more} more)" if more > 0 else '')

    @staticmethod
    def create_summary_box(title: str, content: str) -> str:
        """
        Create a formatted summary box

        Args:
            title: Box title
            content: Box content

        Returns:
            Formatted box
        """
        box = f"\n{'='*60}\n"
        box += f"  {title.upper()}\n"
        box += f"{'='*60}\n\n"
        box += content
        box += f"\n{'='*60}\n"

        return box
