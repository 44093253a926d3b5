import json
import logging
import math
from enum import Enum

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

# 17 significant digits round-trip every binary64 value.
FLOAT_FORMAT = '%.17g'


class OutputFormat(str, Enum):
    HUMAN = 'human'
    CSV = 'csv'
    JSON = 'json'


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Enum):
        return value.value
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _null_nan(value):
    """
    Replace NaN by None throughout a JSON object; strict parsers reject a bare NaN.
    """
    if isinstance(value, dict):
        return {key: _null_nan(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_null_nan(item) for item in value]
    if isinstance(value, (float, np.floating)) and math.isnan(value):
        return None
    return value


def format_float(value):
    if isinstance(value, float) and math.isnan(value):
        return 'nan'
    return FLOAT_FORMAT % value


class ReportBase:
    """
    Shared rendering and export for everything the package reports as a table.

    Subclasses implement to_frame(); to_json_obj() may be overridden when the
    structured form carries more than the table (arrays, nested reports).
    """

    def to_frame(self):
        raise NotImplementedError

    def to_json_obj(self):
        return self.to_frame().to_dict(orient='records')

    def render(self, output_format=OutputFormat.HUMAN):
        """
        Render the report as text.

        :param output_format: 'human', 'csv' or 'json'.
        :return: The rendered string.
        """
        output_format = OutputFormat(output_format)
        if output_format is OutputFormat.CSV:
            return self._render_csv(self.to_frame())
        if output_format is OutputFormat.JSON:
            return json.dumps(_null_nan(self.to_json_obj()), indent=2, default=_json_default, allow_nan=False) + '\n'
        return self._render_human(self.to_frame())

    @staticmethod
    def _render_csv(df):
        return df.to_csv(index=False, float_format=FLOAT_FORMAT)

    @staticmethod
    def _render_human(df):
        if df.empty:
            return '(no rows)\n'
        return df.to_string(index=False, float_format=format_float) + '\n'

    def export(self, output_path, output_format=OutputFormat.CSV):
        """
        Write the rendered report to a file.

        :param output_path: Path of the file to write.
        :param output_format: 'human', 'csv' or 'json'.
        """
        output_format = OutputFormat(output_format)
        with open(output_path, 'w', newline='', encoding='utf-8') as handle:
            handle.write(self.render(output_format))
        logger.info("%s saved to %s", output_format.value.upper(), output_path)


class TableReport(ReportBase):
    def __init__(self, frame, title=''):
        """
        Report backed directly by a DataFrame.

        :param frame: pandas DataFrame with the rows.
        :param title: Optional caption kept for logging.
        """
        self.frame = frame
        self.title = title

    def to_frame(self):
        return self.frame

    @property
    def has_errors(self):
        return 'error' in self.frame.columns and bool(self.frame['error'].fillna('').astype(bool).any())

    @classmethod
    def from_records(cls, records, columns, title=''):
        return cls(pd.DataFrame.from_records(records, columns=columns), title)
