import json
import os
import pathlib
import shutil

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture(scope="session")
def report_schema():
    return json.loads((ROOT / "docs" / "report.schema.json").read_text())


@pytest.fixture(scope="session")
def cli_path():
    path = os.environ.get("TRUEKNN_CLI") or shutil.which("trueknn")
    if path is None:
        built = ROOT / "build" / "trueknn"
        if not built.exists():
            pytest.skip("trueknn executable not found")
        path = str(built)
    return path
