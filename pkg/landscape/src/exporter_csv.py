from __future__ import annotations
import csv
import io
import numpy as np
from .exporter import Exporter


def format_cell(value) -> str:
    """
    Floats are written with repr so that they read back bit-exact
    """
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class ExporterCSV(Exporter):
    def __init__(self):
        super().__init__()
        self.ext: str = "csv"

    def build(self, header: list[str], rows: list) -> str:
        stream = io.StringIO()
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(value) for value in row])

        self.text = stream.getvalue()
        return self.text

    def write(self, header: list[str], rows: list, filename: str) -> str:
        self.build(header, rows)
        return self.write_text(filename)


def read_csv(filename: str) -> tuple[list[str], list[list[str]]]:
    with open(filename, "r", encoding="utf8", newline="") as file:
        reader = csv.reader(file)
        header = next(reader)
        return header, [row for row in reader]
