"""CSV output: comma separated, header row, 17 significant digits, LF endings.

Files of one command are staged in a temporary directory and moved into place only
after every file is complete, so a failing command leaves no partial output.
"""

from __future__ import annotations

import csv
import io
import os
import shutil
import tempfile
from pathlib import Path


def fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".17g")
    if hasattr(x, "dtype"):
        return fmt(x.item())
    return str(x)


def render(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


class Staging:
    """Collects output files and commits them together."""

    def __init__(self, out_dir: str | os.PathLike):
        self.out_dir = Path(out_dir)
        self.files: dict[str, str] = {}

    def csv(self, name: str, header: list[str], rows) -> None:
        self.files[name] = render(header, rows)

    def text(self, name: str, body: str) -> None:
        self.files[name] = body

    def commit(self) -> list[Path]:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        tmp = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.out_dir))
        try:
            for name, body in self.files.items():
                with open(tmp / name, "w", encoding="utf-8", newline="") as fh:
                    fh.write(body)
            done = []
            for name in self.files:
                os.replace(tmp / name, self.out_dir / name)
                done.append(self.out_dir / name)
            return done
        finally:
            shutil.rmtree(tmp, ignore_errors=True)
