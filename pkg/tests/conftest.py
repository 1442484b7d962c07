import io
import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"

# (criterion, passed, detail) recorded by test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


@pytest.fixture(scope="session")
def reference_rows():
    return json.loads((FIXTURES / "reference_rows.json").read_text())


def png_bytes(array, mode=None):
    """Encode with Pillow, independently of the decoder under test."""
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(np.asarray(array), mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def write_case(root, pairs, embeddings=None, model_name="model", extra=None):
    """Lay out masks (and optional embedding arrays) under ``root`` and return the manifest path.

    ``pairs`` maps pair id -> (generated bool array, reference bool array).
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for pid, (gen, ref) in pairs.items():
        g, r = f"{pid}_gen.png", f"{pid}_ref.png"
        (root / g).write_bytes(png_bytes(np.asarray(gen, np.uint8) * 255))
        (root / r).write_bytes(png_bytes(np.asarray(ref, np.uint8) * 255))
        entries.append({"id": pid, "generated_mask": g, "reference_mask": r})
    manifest = {"model_name": model_name}
    if entries:
        manifest["pairs"] = entries
    if embeddings is not None:
        gen_e, ref_e = embeddings
        np.savetxt(root / "gen.csv", gen_e, delimiter=",")
        np.savetxt(root / "ref.csv", ref_e, delimiter=",")
        manifest["cvc"] = {"generated_embeddings": "gen.csv", "reference_embeddings": "ref.csv"}
    manifest.update(extra or {})
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


def block(h, w, y0, y1, x0, x1):
    a = np.zeros((h, w), bool)
    a[y0:y1, x0:x1] = True
    return a
