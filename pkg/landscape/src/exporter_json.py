from __future__ import annotations
import json
import numpy as np
from .exporter import Exporter


def _plain(value):
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(item) for item in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


class ExporterJSON(Exporter):
    def __init__(self):
        super().__init__()
        self.ext: str = "json"

    def build(self, data: dict) -> str:
        self.text = json.dumps(_plain(data), indent=2, sort_keys=True) + "\n"
        return self.text

    def write(self, data: dict, filename: str) -> str:
        self.build(data)
        return self.write_text(filename)
