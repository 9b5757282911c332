# io_utils.py
import io
from pathlib import Path

import pandas as pd


class FileIO:
    """Local file helpers for track/config input and result output."""

    @staticmethod
    def read_text(path) -> str:
        """Read a text file; raise a clean error naming the path if missing."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Missing required file: '{path}'")
        try:
            return path.read_text(encoding="utf-8")
        except OSError as e:
            raise OSError(f"Could not read '{path}': {e}") from e

    @staticmethod
    def write_text(path, text: str) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as e:
            raise OSError(f"Could not write '{path}': {e}") from e
        return path

    @staticmethod
    def write_bytes(path, data: bytes) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        except OSError as e:
            raise OSError(f"Could not write '{path}': {e}") from e
        return path

    @staticmethod
    def read_csv_text(path) -> pd.DataFrame:
        """Read a results CSV with every field as text (no NaN coercion)."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Missing results file: '{path}'")
        return pd.read_csv(path, dtype=str, keep_default_na=False)

    @staticmethod
    def try_export_excel(sheets: dict[str, pd.DataFrame]) -> bytes:
        """Return XLSX bytes with one sheet per entry; prefer xlsxwriter; fallback to openpyxl."""
        bio = io.BytesIO()
        try:
            with pd.ExcelWriter(bio, engine="xlsxwriter") as w:
                for name, df in sheets.items():
                    df.to_excel(w, index=False, sheet_name=name)
        except Exception:
            bio = io.BytesIO()
            with pd.ExcelWriter(bio, engine="openpyxl") as w:
                for name, df in sheets.items():
                    df.to_excel(w, index=False, sheet_name=name)
        bio.seek(0)
        return bio.read()
