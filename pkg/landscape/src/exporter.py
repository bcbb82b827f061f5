from __future__ import annotations
import hashlib
import os
from .utils import get_logger

logger = get_logger("landscape.exporter")


class Exporter:
    def __init__(self):
        self.text: str = ""
        self.ext: str = "txt"
        # Every path written through this exporter, in write order
        self.written: list[str] = []

    def build(self, *args) -> str:
        raise Exception("This exporter should implement build() method")

    def get_text(self, *args) -> str:
        self.build(*args)
        return self.text

    def write_text(self, filename: str) -> str:
        directory = os.path.dirname(os.path.abspath(filename))
        os.makedirs(directory, exist_ok=True)

        with open(filename, "w", encoding="utf8", newline="") as file:
            file.write(self.text)
        logger.info(f"* Writing {os.path.basename(filename)}")

        self.written.append(filename)
        return filename


def file_digest(filename: str) -> str:
    with open(filename, "rb") as file:
        return hashlib.sha256(file.read()).hexdigest()


def build_manifest(directory: str, files: list[str], config_echo: dict | None = None) -> dict:
    """
    Lists the given files, relative to directory, with their SHA-256 and size.
    Entries are sorted so that identical outputs give identical manifests.
    """
    entries = []
    for path in sorted(set(os.path.abspath(f) for f in files)):
        relative = os.path.relpath(path, directory).replace(os.path.sep, "/")
        entries.append(
            {
                "path": relative,
                "sha256": file_digest(path),
                "size": os.path.getsize(path),
            }
        )

    entries.sort(key=lambda entry: entry["path"])
    return {"files": entries, "config": config_echo or {}}
